"""Clamped B-spline bases and the centered additive design matrix.

Each covariate gets ``K + l + 1`` B-splines of degree ``l`` on ``K`` equally
spaced interior knots. They sum to one, so after column centering one of
them is redundant; the design keeps the last ``h_n = K + l`` of them per
covariate, which spans the same centered space at full rank.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, DataError, DegenerateCovariateError

DEFAULT_MEMORY_BUDGET = 2 * 1024**3


@dataclass(frozen=True)
class SplineConfig:
    degree: int = 3
    interior_knots: int = 6

    def __post_init__(self):
        if self.degree < 2:
            raise ValueError(f"spline degree must be >= 2, got {self.degree}")
        if self.interior_knots < 1:
            raise ValueError(f"need at least one interior knot, got {self.interior_knots}")

    @property
    def h_n(self) -> int:
        """Design columns per covariate."""
        return self.interior_knots + self.degree

    @property
    def n_basis(self) -> int:
        """Full B-spline count, including the one dropped from the design."""
        return self.interior_knots + self.degree + 1


@dataclass(frozen=True)
class CovariateBasis:
    knots: np.ndarray
    degree: int
    lower: float
    upper: float

    @property
    def n_basis(self) -> int:
        return len(self.knots) - self.degree - 1

    @property
    def h_n(self) -> int:
        return self.n_basis - 1

    @property
    def interior_knots(self) -> np.ndarray:
        return self.knots[self.degree + 1 : len(self.knots) - self.degree - 1]

    def to_dict(self) -> dict:
        return {
            "degree": self.degree,
            "lower": self.lower,
            "upper": self.upper,
            "knots": [float(k) for k in self.knots],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CovariateBasis":
        return cls(
            knots=np.asarray(d["knots"], dtype=float),
            degree=int(d["degree"]),
            lower=float(d["lower"]),
            upper=float(d["upper"]),
        )


def build_basis(x_column, config: SplineConfig) -> CovariateBasis:
    x = np.asarray(x_column, dtype=float)
    if x.size < 2 or not np.all(np.isfinite(x)):
        raise DegenerateCovariateError("covariate needs at least two finite values")
    a, b = float(x.min()), float(x.max())
    if not b > a:
        raise DegenerateCovariateError(f"covariate is constant (value {a})")
    k = config.interior_knots
    interior = a + (b - a) * np.arange(1, k + 1) / (k + 1)
    l = config.degree
    knots = np.concatenate([np.full(l + 1, a), interior, np.full(l + 1, b)])
    return CovariateBasis(knots=knots, degree=l, lower=a, upper=b)


def eval_basis_matrix(basis: CovariateBasis, x) -> np.ndarray:
    """All ``n_basis`` B-splines at each point of ``x`` (Cox-de Boor recurrence).

    Points outside ``[lower, upper]`` are clamped to the boundary.
    """
    t = basis.knots
    l = basis.degree
    xs = np.clip(np.atleast_1d(np.asarray(x, dtype=float)), basis.lower, basis.upper)
    n_int = len(t) - 1
    # degree-0 indicators on [t_i, t_{i+1}); the right endpoint goes to the last
    # nonempty span so the basis stays a partition of unity at x = upper
    span = np.searchsorted(t, xs, side="right") - 1
    last = n_int - 1 - l
    span = np.minimum(span, last)
    B = np.zeros((xs.size, n_int))
    B[np.arange(xs.size), span] = 1.0
    for d in range(1, l + 1):
        nb = n_int - d
        new = np.zeros((xs.size, nb))
        for i in range(nb):
            left_den = t[i + d] - t[i]
            right_den = t[i + d + 1] - t[i + 1]
            if left_den > 0:
                new[:, i] += (xs - t[i]) / left_den * B[:, i]
            if right_den > 0:
                new[:, i] += (t[i + d + 1] - xs) / right_den * B[:, i + 1]
        B = new
    return B


def eval_basis(basis: CovariateBasis, x: float) -> np.ndarray:
    """Full uncentered basis vector at a single point."""
    return eval_basis_matrix(basis, [x])[0]


@dataclass
class Dataset:
    y: np.ndarray
    X: np.ndarray
    names: list = field(default_factory=list)
    response_name: str = "y"

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim != 2:
            raise DataError("covariate matrix must be 2-D")
        if self.y.shape != (self.X.shape[0],):
            raise DataError(
                f"response length {self.y.shape} does not match {self.X.shape[0]} rows"
            )
        if not self.names:
            self.names = [f"x{j + 1}" for j in range(self.X.shape[1])]
        if len(self.names) != self.X.shape[1]:
            raise DataError("one name per covariate column required")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass
class DesignMatrix:
    """Centered spline design ``Z`` with its centering offsets.

    Columns ``j*h_n : (j+1)*h_n`` belong to covariate ``j``.
    """

    values: np.ndarray
    y_centered: np.ndarray
    column_means: np.ndarray
    response_mean: float
    bases: list
    config: SplineConfig

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return len(self.bases)

    @property
    def h_n(self) -> int:
        return self.config.h_n

    @property
    def group_index(self) -> np.ndarray:
        return np.repeat(np.arange(self.p), self.h_n)

    def block(self, j: int) -> slice:
        return slice(j * self.h_n, (j + 1) * self.h_n)

    def columns(self, predictors) -> np.ndarray:
        h = self.h_n
        if len(predictors) == 0:
            return np.zeros(0, dtype=int)
        return np.concatenate([np.arange(j * h, (j + 1) * h) for j in predictors])


def _reduced_rows(basis: CovariateBasis, x) -> np.ndarray:
    return eval_basis_matrix(basis, x)[:, 1:]


def build_design(
    dataset: Dataset, config: SplineConfig, memory_budget: int = DEFAULT_MEMORY_BUDGET
) -> DesignMatrix:
    n, p = dataset.X.shape
    if n < 2:
        raise DataError("need at least two observations")
    h = config.h_n
    if n * p * h * 8 > memory_budget:
        raise CapacityError(
            f"design of {n} x {p * h} doubles exceeds memory budget of {memory_budget} bytes"
        )
    bases = []
    Z = np.empty((n, p * h))
    for j in range(p):
        try:
            basis = build_basis(dataset.X[:, j], config)
        except DegenerateCovariateError as exc:
            raise DegenerateCovariateError(f"covariate {dataset.names[j]!r}: {exc}") from None
        bases.append(basis)
        Z[:, j * h : (j + 1) * h] = _reduced_rows(basis, dataset.X[:, j])
    means = Z.mean(axis=0)
    Z -= means
    y_mean = float(dataset.y.mean())
    return DesignMatrix(
        values=Z,
        y_centered=dataset.y - y_mean,
        column_means=means,
        response_mean=y_mean,
        bases=bases,
        config=config,
    )


def eval_design_rows(bases, X_points, column_means) -> np.ndarray:
    """Centered design rows for new points (one row per point)."""
    X_points = np.atleast_2d(np.asarray(X_points, dtype=float))
    p = len(bases)
    if X_points.shape[1] != p:
        raise DataError(f"expected {p} covariates per point, got {X_points.shape[1]}")
    blocks = [_reduced_rows(b, X_points[:, j]) for j, b in enumerate(bases)]
    return np.hstack(blocks) - np.asarray(column_means)


def eval_design_row(bases, x_point, column_means) -> np.ndarray:
    return eval_design_rows(bases, np.asarray(x_point, dtype=float)[None, :], column_means)[0]
