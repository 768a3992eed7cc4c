"""Simulation harness: four-function additive model, coverage and selection experiments."""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats as sps
from scipy.linalg import solve_triangular

from .errors import ExperimentFailedError, GFIError
from .fiducial import PenaltyConfig, model_probabilities
from .grouplasso import PathConfig, collect_candidates
from .linmodel import Model, fit_ols
from .pipeline import fit_gfi
from .splines import Dataset, SplineConfig, build_design
from .stats import RngStream, empirical_quantile

log = logging.getLogger(__name__)

TRUE_SUPPORT = (0, 1, 2, 3)
MAX_ERROR_FRACTION = 0.02
CSV_COLUMNS = [
    "target", "method", "level", "coverage", "avg_width",
    "n", "p", "sigma", "l", "K", "replications", "errors_excluded",
]


def true_functions(x):
    """The four nonzero component functions evaluated at ``x`` in [0, 1]."""
    x = np.asarray(x, dtype=float)
    s = np.sin(2 * np.pi * x)
    c = np.cos(2 * np.pi * x)
    f1 = 5 * x
    f2 = 3 * (2 * x - 1) ** 2
    f3 = 4 * s / (2 - s)
    f4 = 6 * (0.1 * s + 0.2 * c) + 0.3 * s**2 + 0.4 * c**3 + 0.5 * s**3
    return f1, f2, f3, f4


def true_mean(X) -> np.ndarray:
    """Sum of the four component functions over the first four columns."""
    X = np.asarray(X, dtype=float)
    return sum(true_functions(X[:, j])[j] for j in range(4))


@dataclass(frozen=True)
class SimSettings:
    n: int = 200
    p: int = 100
    sigma: float = 0.8
    degree: int = 3
    knots: int = 6
    levels: tuple = (0.90, 0.95, 0.99)
    replications: int = 100
    draws_per_rep: int = 10000
    seed: int = 0
    correlation: float = 0.0
    bootstrap_B: int = 10
    q: float | None = None

    def __post_init__(self):
        if self.p < 4:
            raise ValueError("need p >= 4 for the four nonzero functions")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.correlation < 0:
            raise ValueError("correlation knob must be nonnegative")
        object.__setattr__(self, "levels", tuple(float(v) for v in self.levels))

    @property
    def spline(self) -> SplineConfig:
        return SplineConfig(self.degree, self.knots)

    @property
    def path(self) -> PathConfig:
        return PathConfig(bootstrap_B=self.bootstrap_B)

    @property
    def penalty(self) -> PenaltyConfig:
        return PenaltyConfig(self.q) if self.q is not None else PenaltyConfig.default(self.p)


def gen_dataset(settings: SimSettings, rng: RngStream) -> Dataset:
    """Uniform(0,1) covariates and y = f1 + f2 + f3 + f4 + N(0, sigma^2) noise.

    A positive ``correlation`` t mixes a shared uniform into every column,
    ``x_j = (w_j + t u) / (1 + t)``.
    """
    g = rng.generator
    n, p = settings.n, settings.p
    X = g.uniform(size=(n, p))
    if settings.correlation > 0:
        t = settings.correlation
        X = (X + t * g.uniform(size=(n, 1))) / (1 + t)
    y = true_mean(X) + settings.sigma * g.standard_normal(n)
    return Dataset(y, X)


@dataclass
class OracleIntervals:
    sigma2: dict  # level -> (lower, upper)
    mean_lower: dict  # level -> array over design rows
    mean_upper: dict


def oracle_intervals(dataset: Dataset, config: SplineConfig, levels, design=None) -> OracleIntervals:
    """Classical intervals from the least-squares fit of the true support."""
    design = design if design is not None else build_design(dataset, config)
    model = Model(TRUE_SUPPORT, design.h_n)
    fit = fit_ols(design, design.y_centered, model)
    df = fit.df_resid
    Zm = design.values[:, design.columns(model.predictors)]
    fitted = design.response_mean + Zm @ fit.beta_hat
    lev = np.sqrt((solve_triangular(fit.gram_factor, Zm.T, trans="T", lower=False) ** 2).sum(axis=0))
    s = math.sqrt(fit.rss / df)
    sig, lo, hi = {}, {}, {}
    for level in levels:
        a = 1 - level
        sig[level] = (fit.rss / sps.chi2.ppf(1 - a / 2, df), fit.rss / sps.chi2.ppf(a / 2, df))
        half = sps.t.ppf(1 - a / 2, df) * s * lev
        lo[level] = fitted - half
        hi[level] = fitted + half
    return OracleIntervals(sig, lo, hi)


@dataclass
class ReplicationResult:
    rep: int
    error: str | None = None
    # (target, method, level) -> (coverage in [0,1], width)
    cells: dict = field(default_factory=dict)
    top_is_true: bool | None = None


def run_replication(settings: SimSettings, rep: int) -> ReplicationResult:
    rng = RngStream(settings.seed, rep)
    data = gen_dataset(settings, rng.substream(0))
    mu = true_mean(data.X)
    s2 = settings.sigma**2
    res = ReplicationResult(rep)
    try:
        fit = fit_gfi(data, settings.spline, settings.path, settings.penalty,
                      settings.draws_per_rep, rng.substream(1))
        oracle = oracle_intervals(data, settings.spline, settings.levels, design=fit.design)
    except GFIError as exc:
        res.error = f"{type(exc).__name__}: {exc}"
        return res
    res.top_is_true = fit.top_model.predictors == TRUE_SUPPORT
    sig2 = fit.sample.sigma**2
    means = fit.mean_draws(data.X)
    for level in settings.levels:
        a = 1 - level
        lo, hi = empirical_quantile(sig2, [a / 2, 1 - a / 2])
        res.cells[("sigma2", "proposed", level)] = (float(lo <= s2 <= hi), float(hi - lo))
        olo, ohi = oracle.sigma2[level]
        res.cells[("sigma2", "oracle", level)] = (float(olo <= s2 <= ohi), float(ohi - olo))
        q = empirical_quantile(means, [a / 2, 1 - a / 2])
        hit = (q[0] <= mu) & (mu <= q[1])
        res.cells[("mean", "proposed", level)] = (float(hit.mean()), float((q[1] - q[0]).mean()))
        ml, mh = oracle.mean_lower[level], oracle.mean_upper[level]
        ohit = (ml <= mu) & (mu <= mh)
        res.cells[("mean", "oracle", level)] = (float(ohit.mean()), float((mh - ml).mean()))
    return res


def run_selection_replication(settings: SimSettings, rep: int) -> ReplicationResult:
    rng = RngStream(settings.seed, rep)
    data = gen_dataset(settings, rng.substream(0))
    res = ReplicationResult(rep)
    try:
        design = build_design(data, settings.spline)
        cands = collect_candidates(design, design.y_centered, settings.path, rng.substream(1).substream(1))
        probs = model_probabilities(cands.fits, settings.penalty)
    except GFIError as exc:
        res.error = f"{type(exc).__name__}: {exc}"
        return res
    res.top_is_true = probs[0].model.predictors == TRUE_SUPPORT
    return res


def _init_worker():
    try:
        from threadpoolctl import threadpool_limits

        threadpool_limits(1)
    except ImportError:  # pragma: no cover
        pass


def _run_many(func, settings: SimSettings, threads: int) -> list:
    reps = range(settings.replications)
    if threads <= 1:
        return [func(settings, r) for r in reps]
    with ProcessPoolExecutor(max_workers=threads, initializer=_init_worker) as pool:
        return list(pool.map(func, [settings] * len(reps), reps, chunksize=1))


def _check_failures(results, settings):
    failed = [r for r in results if r.error is not None]
    for r in failed:
        log.warning("replication %d excluded: %s", r.rep, r.error)
    if len(failed) > MAX_ERROR_FRACTION * settings.replications:
        raise ExperimentFailedError(
            f"{len(failed)} of {settings.replications} replications failed"
        )
    return len(failed)


@dataclass(frozen=True)
class CoverageRow:
    target: str
    method: str
    level: float
    coverage: float
    avg_width: float


@dataclass
class CoverageReport:
    settings: SimSettings
    rows: list
    errors_excluded: int
    selection_frequency: float

    def row(self, target, method, level) -> CoverageRow:
        for r in self.rows:
            if (r.target, r.method, r.level) == (target, method, level):
                return r
        raise KeyError((target, method, level))

    def to_csv(self) -> str:
        return coverage_csv(self.rows, self.settings, self.errors_excluded)


def coverage_experiment(settings: SimSettings, threads: int = 1) -> CoverageReport:
    results = _run_many(run_replication, settings, threads)
    n_err = _check_failures(results, settings)
    ok = [r for r in results if r.error is None]
    rows = []
    for target in ("sigma2", "mean"):
        for method in ("proposed", "oracle"):
            for level in settings.levels:
                vals = np.array([r.cells[(target, method, level)] for r in ok])
                rows.append(CoverageRow(target, method, level,
                                        float(vals[:, 0].mean()), float(vals[:, 1].mean())))
    sel = float(np.mean([r.top_is_true for r in ok]))
    return CoverageReport(settings, rows, n_err, sel)


def selection_experiment(settings: SimSettings, threads: int = 1) -> float:
    """Fraction of replications whose highest-probability model is the true support."""
    results = _run_many(run_selection_replication, settings, threads)
    _check_failures(results, settings)
    ok = [r for r in results if r.error is None]
    return float(np.mean([r.top_is_true for r in ok]))


def coverage_csv(rows, settings: SimSettings, errors_excluded: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([
            r.target, r.method, repr(r.level), repr(r.coverage), repr(r.avg_width),
            settings.n, settings.p, repr(float(settings.sigma)), settings.degree,
            settings.knots, settings.replications, errors_excluded,
        ])
    return buf.getvalue()


def settings_dict(settings: SimSettings) -> dict:
    d = asdict(settings)
    d["levels"] = list(settings.levels)
    return d
