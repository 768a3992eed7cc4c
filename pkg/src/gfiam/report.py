"""Results and fitted-state documents written by the CLI.

Both are JSON with a ``schema`` name and integer ``version``. Floats are
written with Python's shortest round-trip repr, so identical inputs produce
identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
import numpy as np
import scipy

from . import __version__
from .errors import SchemaMismatchError
from .fiducial import FiducialSample, ModelProbability
from .inference import default_grid, function_band, model_summary, sigma_summary
from .linmodel import Model, ModelFit
from .splines import CovariateBasis, SplineConfig

RESULTS_SCHEMA = "gfiam.results"
STATE_SCHEMA = "gfiam.state"
VERSION = 1


def inclusion_probabilities(probs, p: int) -> np.ndarray:
    incl = np.zeros(p)
    for mp in probs:
        for j in mp.model.predictors:
            incl[j] += mp.prob
    return incl


def results_document(fit, *, levels, seed, top_k=10, grid_size=100, screen=None, config=None) -> dict:
    names = fit.names
    d = fit.design
    sig_point, _ = sigma_summary(fit.sample, levels[0])
    sigma_intervals = []
    for level in levels:
        _, iv = sigma_summary(fit.sample, level)
        sigma_intervals.append({"level": level, "lower": iv.lower, "upper": iv.upper})
    bands = []
    for j in fit.top_model.predictors:
        grid = default_grid(d.bases[j], grid_size)
        for level in levels:
            b = function_band(fit.sample, j, grid, d.bases, d.column_means, level)
            bands.append({
                "predictor": names[j],
                "level": level,
                "grid": b.grid.tolist(),
                "lower": b.lower.tolist(),
                "median": b.median.tolist(),
                "upper": b.upper.tolist(),
            })
    models = [
        {"rank": r.rank, "predictors": list(r.names), "indices": list(r.predictors),
         "prob": r.prob, "log_R": r.log_R}
        for r in model_summary(fit.probabilities, top_k, names)
    ]
    incl = inclusion_probabilities(fit.probabilities, d.p)
    doc = {
        "schema": RESULTS_SCHEMA,
        "version": VERSION,
        "config": config or {},
        "data": {"n": d.n, "p": d.p, "h_n": d.h_n, "response_mean": d.response_mean},
        "screen": [
            {"rank": s.rank, "name": s.name, "index": s.index, "variance": s.variance}
            for s in (screen or [])
        ],
        "n_candidates": len(fit.probabilities),
        "models": models,
        "inclusion": [
            {"predictor": names[j], "prob": float(incl[j])} for j in np.flatnonzero(incl > 0)
        ],
        "sigma": {"point": sig_point, "intervals": sigma_intervals},
        "bands": bands,
        "metadata": {
            "seed": seed,
            "draws": len(fit.sample),
            "gfiam": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }
    return doc


def state_document(fit) -> dict:
    d = fit.design
    return {
        "schema": STATE_SCHEMA,
        "version": VERSION,
        "names": list(fit.names),
        "spline": {"degree": d.config.degree, "knots": d.config.interior_knots},
        "bases": [b.to_dict() for b in d.bases],
        "column_means": d.column_means.tolist(),
        "response_mean": d.response_mean,
        "q": fit.penalty.q,
        "probabilities": [
            {"predictors": list(mp.model.predictors), "log_R": mp.log_R, "prob": mp.prob}
            for mp in fit.probabilities
        ],
        "fits": [fit.fits[mp.model].to_dict() for mp in fit.probabilities],
        "draws": fit.sample.to_dict(),
    }


def dump(doc, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=False)
        fh.write("\n")


@dataclass
class FittedState:
    names: list
    spline: SplineConfig
    bases: list
    column_means: np.ndarray
    response_mean: float
    probabilities: list
    fits: dict
    sample: FiducialSample


def load_state(path) -> FittedState:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("schema") != STATE_SCHEMA:
        raise SchemaMismatchError(f"{path} is not a fitted-state document")
    if doc.get("version") != VERSION:
        raise SchemaMismatchError(f"unsupported state version {doc.get('version')}")
    spline = SplineConfig(doc["spline"]["degree"], doc["spline"]["knots"])
    h = spline.h_n
    probs = [
        ModelProbability(Model(tuple(e["predictors"]), h), e["log_R"], e["prob"])
        for e in doc["probabilities"]
    ]
    fits = {}
    for e in doc["fits"]:
        f = ModelFit.from_dict(e, h)
        fits[f.model] = f
    return FittedState(
        names=doc["names"],
        spline=spline,
        bases=[CovariateBasis.from_dict(b) for b in doc["bases"]],
        column_means=np.asarray(doc["column_means"], dtype=float),
        response_mean=float(doc["response_mean"]),
        probabilities=probs,
        fits=fits,
        sample=FiducialSample.from_dict(doc["draws"], h),
    )
