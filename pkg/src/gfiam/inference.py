"""Summaries of a fiducial sample: sigma, function bands, mean and prediction intervals.

Draws in which a covariate is absent contribute exactly zero for that
covariate, so bands and intervals are model averaged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fiducial import FiducialSample
from .splines import _reduced_rows, eval_design_rows
from .stats import RngStream, empirical_quantile


@dataclass(frozen=True)
class Interval:
    lower: float
    upper: float
    level: float

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError(f"lower {self.lower} exceeds upper {self.upper}")
        if not 0 < self.level < 1:
            raise ValueError(f"level must lie in (0, 1), got {self.level}")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def __contains__(self, value) -> bool:
        return self.lower <= value <= self.upper


@dataclass
class FunctionBand:
    predictor: int
    grid: np.ndarray
    lower: np.ndarray
    median: np.ndarray
    upper: np.ndarray
    level: float


def _tails(level):
    if not 0 < level < 1:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    alpha = 1.0 - level
    return alpha / 2.0, 1.0 - alpha / 2.0


def _interval(values, level) -> Interval:
    lo, hi = _tails(level)
    a, b = empirical_quantile(values, [lo, hi])
    return Interval(float(a), float(b), level)


def sigma_summary(draws, level: float = 0.95):
    """Median of the sigma draws and the equal-tailed interval."""
    sample = FiducialSample.from_draws(draws)
    point = float(empirical_quantile(sample.sigma, 0.5))
    return point, _interval(sample.sigma, level)


def sigma2_interval(draws, level: float = 0.95) -> Interval:
    sample = FiducialSample.from_draws(draws)
    return _interval(sample.sigma**2, level)


def default_grid(basis, size: int = 100) -> np.ndarray:
    return np.linspace(basis.lower, basis.upper, size)


def function_curves(draws, predictor: int, grid, bases, column_means) -> np.ndarray:
    """Centered curve of covariate ``predictor`` for every draw, shape (draws, grid)."""
    sample = FiducialSample.from_draws(draws)
    basis = bases[predictor]
    h = basis.h_n
    means = np.asarray(column_means)[predictor * h : (predictor + 1) * h]
    Zg = _reduced_rows(basis, np.asarray(grid, dtype=float)) - means
    curves = np.zeros((len(sample), len(grid)))
    for model, pos, betas in sample.groups():
        if predictor not in model:
            continue
        k = model.predictors.index(predictor)
        curves[pos] = betas[:, k * h : (k + 1) * h] @ Zg.T
    return curves


def function_band(
    draws, predictor: int, grid, bases, column_means, level: float = 0.95
) -> FunctionBand:
    lo, hi = _tails(level)
    curves = function_curves(draws, predictor, grid, bases, column_means)
    q = empirical_quantile(curves, [lo, 0.5, hi])
    return FunctionBand(
        predictor=predictor,
        grid=np.asarray(grid, dtype=float),
        lower=q[0],
        median=q[1],
        upper=q[2],
        level=level,
    )


def mean_draws(draws, X_points, bases, column_means, response_mean) -> np.ndarray:
    """Fiducial draws of E(Y | x) at each point, shape (draws, points)."""
    sample = FiducialSample.from_draws(draws)
    Zp = eval_design_rows(bases, X_points, column_means)
    h = bases[0].h_n if bases else 0
    out = np.full((len(sample), Zp.shape[0]), float(response_mean))
    for model, pos, betas in sample.groups():
        if model.m == 0:
            continue
        cols = np.concatenate([np.arange(j * h, (j + 1) * h) for j in model.predictors])
        out[pos] += betas @ Zp[:, cols].T
    return out


def prediction_draws(draws, X_points, bases, column_means, response_mean, rng: RngStream):
    sample = FiducialSample.from_draws(draws)
    mu = mean_draws(sample, X_points, bases, column_means, response_mean)
    w = rng.generator.standard_normal(mu.shape)
    return mu + sample.sigma[:, None] * w


def intervals_from_draws(values, level: float) -> list:
    lo, hi = _tails(level)
    q = empirical_quantile(values, [lo, hi])
    return [Interval(float(a), float(b), level) for a, b in zip(np.atleast_1d(q[0]), np.atleast_1d(q[1]))]


def mean_ci(draws, x_point, bases, column_means, response_mean, level: float = 0.95) -> Interval:
    vals = mean_draws(draws, np.asarray(x_point, dtype=float)[None, :], bases, column_means, response_mean)
    return _interval(vals[:, 0], level)


def prediction_interval(
    draws, x_point, bases, column_means, response_mean, level: float, rng: RngStream
) -> Interval:
    vals = prediction_draws(
        draws, np.asarray(x_point, dtype=float)[None, :], bases, column_means, response_mean, rng
    )
    return _interval(vals[:, 0], level)


@dataclass(frozen=True)
class ModelRow:
    rank: int
    predictors: tuple
    names: tuple
    prob: float
    log_R: float


def model_summary(probs, top_k: int = 10, names=None) -> list:
    ordered = sorted(probs, key=lambda mp: (-mp.prob, mp.model.predictors))
    rows = []
    for rank, mp in enumerate(ordered[:top_k], start=1):
        preds = mp.model.predictors
        label = tuple(names[j] for j in preds) if names is not None else tuple(f"x{j + 1}" for j in preds)
        rows.append(ModelRow(rank, preds, label, mp.prob, mp.log_R))
    return rows
