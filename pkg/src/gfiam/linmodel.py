"""Least-squares refits of candidate models."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import AdmissibilityError, RankDeficiencyError

RANK_TOL = 1e-10
MIN_RESID_DF = 3


@dataclass(frozen=True, order=True)
class Model:
    """A set of selected covariates (0-based column indices)."""

    predictors: tuple
    h_n: int

    def __post_init__(self):
        preds = tuple(sorted(int(j) for j in self.predictors))
        if len(set(preds)) != len(preds):
            raise ValueError(f"duplicate predictor in {self.predictors}")
        if preds and preds[0] < 0:
            raise ValueError("predictor indices must be nonnegative")
        object.__setattr__(self, "predictors", preds)

    @property
    def m(self) -> int:
        return len(self.predictors)

    @property
    def p_star(self) -> int:
        return self.m * self.h_n

    def __contains__(self, j) -> bool:
        return j in self.predictors

    def label(self, names=None) -> str:
        if names is None:
            return "{" + ",".join(str(j + 1) for j in self.predictors) + "}"
        return "{" + ",".join(names[j] for j in self.predictors) + "}"


@dataclass
class ModelFit:
    model: Model
    n: int
    rss: float
    beta_hat: np.ndarray
    gram_factor: np.ndarray  # upper triangular R with R'R = Z_M'Z_M

    @property
    def df_resid(self) -> int:
        return self.n - self.model.p_star

    def to_dict(self) -> dict:
        return {
            "predictors": list(self.model.predictors),
            "n": self.n,
            "rss": self.rss,
            "beta_hat": [float(b) for b in self.beta_hat],
            "gram_factor": [[float(v) for v in row] for row in self.gram_factor],
        }

    @classmethod
    def from_dict(cls, d: dict, h_n: int) -> "ModelFit":
        model = Model(tuple(d["predictors"]), h_n)
        R = np.asarray(d["gram_factor"], dtype=float).reshape(model.p_star, model.p_star)
        return cls(
            model=model,
            n=int(d["n"]),
            rss=float(d["rss"]),
            beta_hat=np.asarray(d["beta_hat"], dtype=float),
            gram_factor=R,
        )


def fit_ols(design, y_centered, model: Model) -> ModelFit:
    """Refit ``model`` by least squares through a Householder QR of ``Z_M``.

    Raises AdmissibilityError when fewer than three residual degrees of
    freedom would remain and RankDeficiencyError when the triangular factor
    has a diagonal entry below ``RANK_TOL`` relative to its largest one.
    """
    Zfull = design.values if hasattr(design, "values") else np.asarray(design)
    y = np.asarray(y_centered, dtype=float)
    n = Zfull.shape[0]
    if model.p_star > n - MIN_RESID_DF:
        raise AdmissibilityError(
            f"model {model.label()} has {model.p_star} coefficients but n = {n}"
        )
    if model.m == 0:
        return ModelFit(model, n, float(y @ y), np.zeros(0), np.zeros((0, 0)))
    h = model.h_n
    cols = np.concatenate([np.arange(j * h, (j + 1) * h) for j in model.predictors])
    Z = Zfull[:, cols]
    Q, R = np.linalg.qr(Z, mode="reduced")
    diag = np.abs(np.diag(R))
    if diag.min() <= RANK_TOL * diag.max():
        raise RankDeficiencyError(f"design of model {model.label()} is rank deficient")
    qty = Q.T @ y
    beta = solve_triangular(R, qty, lower=False)
    resid = y - Z @ beta
    rss = float(resid @ resid)
    # R from LAPACK may carry negative diagonal signs; R'R is unaffected
    return ModelFit(model, n, rss, beta, R)


def projection_rss(fit: ModelFit) -> float:
    return fit.rss


def fitted_values(design, fit: ModelFit) -> np.ndarray:
    if fit.model.m == 0:
        return np.zeros(design.n)
    return design.values[:, design.columns(fit.model.predictors)] @ fit.beta_hat
