"""End-to-end fit: design, candidate models, probabilities, fiducial draws."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fiducial import FiducialSample, PenaltyConfig, model_probabilities, sample_fiducial
from .grouplasso import CandidateModels, PathConfig, collect_candidates
from .inference import Interval, intervals_from_draws, mean_draws, prediction_draws
from .splines import Dataset, DesignMatrix, SplineConfig, build_design
from .stats import RngStream


@dataclass
class GFIFit:
    design: DesignMatrix
    candidates: CandidateModels
    probabilities: list
    sample: FiducialSample
    penalty: PenaltyConfig
    names: list

    @property
    def fits(self) -> dict:
        return self.candidates.fits

    @property
    def top_model(self):
        return self.probabilities[0].model

    def mean_draws(self, X_points) -> np.ndarray:
        d = self.design
        return mean_draws(self.sample, X_points, d.bases, d.column_means, d.response_mean)

    def prediction_draws(self, X_points, rng: RngStream) -> np.ndarray:
        d = self.design
        return prediction_draws(self.sample, X_points, d.bases, d.column_means, d.response_mean, rng)


def fit_gfi(
    dataset: Dataset,
    spline: SplineConfig = SplineConfig(),
    path: PathConfig = PathConfig(),
    penalty: PenaltyConfig | None = None,
    draws: int = 10000,
    rng: RngStream | None = None,
) -> GFIFit:
    rng = rng if rng is not None else RngStream(0)
    penalty = penalty if penalty is not None else PenaltyConfig.default(dataset.p)
    design = build_design(dataset, spline)
    candidates = collect_candidates(design, design.y_centered, path, rng.substream(1))
    probs = model_probabilities(candidates.fits, penalty)
    sample = sample_fiducial(probs, candidates.fits, draws, rng.substream(2))
    return GFIFit(design, candidates, probs, sample, penalty, list(dataset.names))


def leave_one_out(
    dataset: Dataset,
    spline: SplineConfig = SplineConfig(),
    path: PathConfig = PathConfig(),
    q: float | None = None,
    draws: int = 10000,
    level: float = 0.95,
    rng: RngStream | None = None,
) -> list:
    """Prediction interval for each held-out row, refitting without it.

    Returns a list of ``(row, y, Interval)``.
    """
    rng = rng if rng is not None else RngStream(0)
    out = []
    for i in range(dataset.n):
        keep = np.arange(dataset.n) != i
        sub = Dataset(dataset.y[keep], dataset.X[keep], list(dataset.names), dataset.response_name)
        penalty = PenaltyConfig(q) if q is not None else None
        stream = rng.substream(100 + i)
        fit = fit_gfi(sub, spline, path, penalty, draws, stream)
        vals = fit.prediction_draws(dataset.X[i][None, :], stream.substream(3))
        (iv,) = intervals_from_draws(vals, level)
        out.append((i, float(dataset.y[i]), iv))
    return out


__all__ = ["GFIFit", "Interval", "fit_gfi", "leave_one_out"]
