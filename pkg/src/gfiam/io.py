"""CSV ingestion/emission and variance screening."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import CSVFormatError, DataError, NonFiniteValueError
from .splines import Dataset


def _parse_cell(text, row, column):
    try:
        value = float(text)
    except ValueError:
        if text.strip() == "":
            raise CSVFormatError("missing value", row, column) from None
        raise CSVFormatError(f"cannot parse {text!r} as a number", row, column) from None
    if not math.isfinite(value):
        raise NonFiniteValueError(f"non-finite value {text!r}", row, column)
    return value


def read_table(path):
    """Read a numeric CSV with a header row. Returns ``(header, matrix)``.

    Row numbers in errors are 1-based file lines (the header is line 1).
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CSVFormatError(f"{path}: empty file") from None
        if len(set(header)) != len(header):
            dup = sorted({h for h in header if header.count(h) > 1})
            raise CSVFormatError(f"duplicate header name(s) {dup}", 1)
        if any(h == "" for h in header):
            raise CSVFormatError("empty header name", 1)
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise CSVFormatError(
                    f"expected {len(header)} fields, found {len(rec)}", lineno
                )
            rows.append([_parse_cell(c, lineno, header[k]) for k, c in enumerate(rec)])
    if not rows:
        raise CSVFormatError(f"{path}: no data rows")
    return header, np.array(rows, dtype=float)


def ingest_csv(path, response_column: str | None = None) -> Dataset:
    header, values = read_table(path)
    if len(header) < 2:
        raise CSVFormatError("need a response column and at least one covariate", 1)
    response = header[0] if response_column is None else response_column
    if response not in header:
        raise DataError(f"response column {response!r} not found in header")
    k = header.index(response)
    cov = [j for j in range(len(header)) if j != k]
    return Dataset(
        y=values[:, k],
        X=values[:, cov],
        names=[header[j] for j in cov],
        response_name=response,
    )


def write_csv(dataset: Dataset, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([dataset.response_name, *dataset.names])
        for yi, row in zip(dataset.y, dataset.X):
            w.writerow([repr(float(yi)), *(repr(float(v)) for v in row)])


def write_rows(path, header, rows) -> None:
    """Write a CSV table; floats use the shortest round-trip representation."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


@dataclass(frozen=True)
class ScreenRow:
    rank: int
    name: str
    index: int
    variance: float


def variance_screen(dataset: Dataset, top_d: int):
    """Keep the ``top_d`` covariates with the largest sample variance.

    Ties go to the earlier column. The reduced dataset keeps the surviving
    columns in their original order; the report lists them by rank.
    """
    p = dataset.p
    if not 1 <= top_d <= p:
        raise DataError(f"screen size must lie in [1, {p}], got {top_d}")
    var = dataset.X.var(axis=0, ddof=1)
    order = np.argsort(-var, kind="stable")[:top_d]
    report = [ScreenRow(r, dataset.names[j], int(j), float(var[j])) for r, j in enumerate(order, 1)]
    keep = np.sort(order)
    reduced = Dataset(
        y=dataset.y.copy(),
        X=dataset.X[:, keep],
        names=[dataset.names[j] for j in keep],
        response_name=dataset.response_name,
    )
    return reduced, report
