"""Fiducial model probabilities and draws of (model, sigma, beta)."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp

from .errors import AdmissibilityError, DegenerateFitError, EmptyCandidateSetError
from .linmodel import MIN_RESID_DF, Model, ModelFit
from .stats import RngStream

_LOG_2PI = math.log(2.0 * math.pi)
_LOG_2 = math.log(2.0)


@dataclass(frozen=True)
class PenaltyConfig:
    q: float

    def __post_init__(self):
        if not 0 < self.q < 1:
            raise ValueError(f"q must lie in (0, 1), got {self.q}")

    @classmethod
    def default(cls, p: int) -> "PenaltyConfig":
        """``q = 0.2 / p``."""
        return cls(0.2 / p)

    @property
    def log_q(self) -> float:
        return math.log(self.q)


@dataclass(frozen=True)
class ModelProbability:
    model: Model
    log_R: float
    prob: float


def log_R(rss: float, p_star: int, n: int, log_q: float) -> float:
    """Log of the unnormalized fiducial model weight.

    ``R = (2 pi)^((p*-n)/2) 2^((n-p*-2)/2) RSS^((p*-n+1)/2) Gamma((n-p*)/2) q^p*``
    """
    if n - p_star < MIN_RESID_DF:
        raise AdmissibilityError(f"n - p* = {n - p_star} < {MIN_RESID_DF}")
    if not rss > 0:
        raise DegenerateFitError(f"residual sum of squares must be positive, got {rss}")
    return (
        0.5 * (p_star - n) * _LOG_2PI
        + 0.5 * (n - p_star - 2) * _LOG_2
        + 0.5 * (p_star - n + 1) * math.log(rss)
        + math.lgamma(0.5 * (n - p_star))
        + p_star * log_q
    )


def model_probabilities(fits, penalty: PenaltyConfig) -> list:
    """Normalized probabilities over the candidate fits, sorted by decreasing probability.

    Fits that are inadmissible or interpolate exactly are skipped. Ties are
    ordered by the predictor tuple.
    """
    fits = list(fits.values()) if isinstance(fits, dict) else list(fits)
    entries = []
    for fit in fits:
        try:
            lr = log_R(fit.rss, fit.model.p_star, fit.n, penalty.log_q)
        except (AdmissibilityError, DegenerateFitError):
            continue
        entries.append((fit.model, lr))
    if not entries:
        raise EmptyCandidateSetError("no admissible candidate model")
    logs = np.array([lr for _, lr in entries])
    norm = logsumexp(logs)
    probs = np.exp(logs - norm)
    out = [ModelProbability(m, float(lr), float(pr)) for (m, lr), pr in zip(entries, probs)]
    out.sort(key=lambda mp: (-mp.prob, mp.model.predictors))
    return out


@dataclass(frozen=True)
class FiducialDraw:
    model: Model
    sigma: float
    beta: np.ndarray


class FiducialSample(Sequence):
    """A batch of fiducial draws stored column-wise.

    ``model_index[i]`` points into ``models``; ``beta[i]`` has length
    ``models[model_index[i]].p_star``. Indexing yields ``FiducialDraw``.
    """

    def __init__(self, models, model_index, sigma, beta):
        self.models = list(models)
        self.model_index = np.asarray(model_index, dtype=int)
        self.sigma = np.asarray(sigma, dtype=float)
        self.beta = list(beta)
        if not (len(self.model_index) == len(self.sigma) == len(self.beta)):
            raise ValueError("draw arrays must have equal length")

    def __len__(self):
        return len(self.sigma)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return FiducialSample(self.models, self.model_index[i], self.sigma[i], self.beta[i])
        return FiducialDraw(self.models[self.model_index[i]], float(self.sigma[i]), self.beta[i])

    @classmethod
    def from_draws(cls, draws) -> "FiducialSample":
        if isinstance(draws, FiducialSample):
            return draws
        models, lookup, idx, sig, betas = [], {}, [], [], []
        for d in draws:
            if d.model not in lookup:
                lookup[d.model] = len(models)
                models.append(d.model)
            idx.append(lookup[d.model])
            sig.append(d.sigma)
            betas.append(np.asarray(d.beta, dtype=float))
        return cls(models, idx, sig, betas)

    def groups(self):
        """Yield ``(model, draw positions, stacked betas)`` per distinct model."""
        for k, model in enumerate(self.models):
            pos = np.flatnonzero(self.model_index == k)
            if pos.size == 0:
                continue
            betas = np.vstack([self.beta[i] for i in pos]) if model.p_star else np.zeros((pos.size, 0))
            yield model, pos, betas

    def model_frequencies(self) -> dict:
        counts = np.bincount(self.model_index, minlength=len(self.models))
        return {m: int(c) for m, c in zip(self.models, counts) if c}

    def to_dict(self) -> dict:
        return {
            "models": [list(m.predictors) for m in self.models],
            "model_index": [int(i) for i in self.model_index],
            "sigma": [float(s) for s in self.sigma],
            "beta": [[float(v) for v in b] for b in self.beta],
        }

    @classmethod
    def from_dict(cls, d: dict, h_n: int) -> "FiducialSample":
        models = [Model(tuple(m), h_n) for m in d["models"]]
        return cls(models, d["model_index"], d["sigma"], [np.asarray(b, dtype=float) for b in d["beta"]])


def sample_fiducial(probs, fits, count: int, rng: RngStream) -> FiducialSample:
    """Draw ``count`` fiducial samples.

    Model ~ categorical(probs); ``sigma^2 = RSS_M / chi2(n - p*)``;
    ``beta = beta_hat + sigma * R^{-1} z`` with ``R'R = Z_M'Z_M``, which gives
    ``beta | sigma ~ N(beta_hat, sigma^2 (Z_M'Z_M)^{-1})``.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    probs = list(probs)
    models = [mp.model for mp in probs]
    weights = np.array([mp.prob for mp in probs], dtype=float)
    weights = weights / weights.sum()
    gen = rng.generator
    model_index = gen.choice(len(models), size=count, p=weights)
    sigma = np.empty(count)
    betas = [None] * count
    for k, model in enumerate(models):
        pos = np.flatnonzero(model_index == k)
        if pos.size == 0:
            continue
        fit: ModelFit = fits[model]
        df = fit.n - model.p_star
        chi = gen.chisquare(df, size=pos.size)
        s = np.sqrt(fit.rss / chi)
        sigma[pos] = s
        if model.p_star == 0:
            for i in pos:
                betas[i] = np.zeros(0)
            continue
        z = gen.standard_normal((model.p_star, pos.size))
        dev = solve_triangular(fit.gram_factor, z, lower=False) * s
        block = fit.beta_hat[:, None] + dev
        for col, i in enumerate(pos):
            betas[i] = block[:, col].copy()
    return FiducialSample(models, model_index, sigma, betas)
