"""Group-lasso solution paths used to build the candidate model set.

Objective, for a centered design ``Z`` split into equal-width contiguous
blocks::

    L(beta) = ||y - Z beta||^2 + lam * sum_j ||beta_j||_2

minimized by proximal gradient with group soft-thresholding, a backtracking
step size, and a monotone momentum term (the momentum is dropped whenever it
would raise the objective, so every accepted iterate is a descent step).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import AdmissibilityError, ConvergenceWarning, RankDeficiencyError
from .linmodel import MIN_RESID_DF, Model, fit_ols
from .stats import RngStream

SUPPORT_TOL = 1e-8


@dataclass(frozen=True)
class PathConfig:
    grid_size: int = 50
    grid_ratio: float = 1e-3
    max_iter: int = 10000
    tol: float = 1e-6
    bootstrap_B: int = 10
    accelerate: bool = True

    def __post_init__(self):
        if self.grid_size < 2:
            raise ValueError("grid_size must be >= 2")
        if not 0 < self.grid_ratio < 1:
            raise ValueError("grid_ratio must lie in (0, 1)")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.bootstrap_B < 0:
            raise ValueError("bootstrap_B must be >= 0")


@dataclass
class SolveResult:
    beta: np.ndarray
    objective: float
    n_iter: int
    converged: bool
    history: list = field(default_factory=list)


def _as_matrix(design):
    return design.values if hasattr(design, "values") else np.asarray(design, dtype=float)


def lambda_max(design, y, h_n: int | None = None) -> float:
    """Smallest penalty at which ``beta = 0`` satisfies the optimality conditions."""
    Z = _as_matrix(design)
    h = h_n if h_n is not None else design.h_n
    g = (Z.T @ np.asarray(y, dtype=float)).reshape(-1, h)
    return float(2.0 * np.sqrt((g * g).sum(axis=1)).max())


def largest_eigenvalue(Z, n_iter: int = 100, rng_seed: int = 0) -> float:
    """Power iteration estimate of the top eigenvalue of ``2 Z'Z``."""
    v = np.random.default_rng(rng_seed).standard_normal(Z.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(n_iter):
        w = Z.T @ (Z @ v)
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        new = nw
        v = w / nw
        if abs(new - est) <= 1e-8 * new:
            est = new
            break
        est = new
    return 2.0 * est


def group_soft_threshold(v, threshold, h_n):
    """Shrink each length-``h_n`` block of ``v`` toward zero by ``threshold`` in norm."""
    blocks = v.reshape(-1, h_n)
    norms = np.sqrt((blocks * blocks).sum(axis=1))
    scale = np.zeros_like(norms)
    keep = norms > threshold
    scale[keep] = 1.0 - threshold / norms[keep]
    return (blocks * scale[:, None]).reshape(-1)


def objective(Z, y, beta, lam, h_n):
    r = y - Z @ beta
    b = beta.reshape(-1, h_n)
    return float(r @ r + lam * np.sqrt((b * b).sum(axis=1)).sum())


def kkt_residuals(design, y, beta, lam, h_n=None):
    """Optimality residuals relative to ``lam``.

    Returns ``(active, inactive)``: the largest
    ``||2 Z_j'r - lam beta_j/||beta_j|| || / lam`` over nonzero blocks and the
    largest ``2 ||Z_j'r|| / lam`` over zero blocks (which must be <= 1).
    """
    Z = _as_matrix(design)
    h = h_n if h_n is not None else design.h_n
    r = np.asarray(y, dtype=float) - Z @ beta
    g = 2.0 * (Z.T @ r).reshape(-1, h)
    B = np.asarray(beta).reshape(-1, h)
    norms = np.sqrt((B * B).sum(axis=1))
    act = norms > 0
    active = 0.0
    inactive = 0.0
    if act.any():
        dev = g[act] - lam * B[act] / norms[act, None]
        active = float(np.sqrt((dev * dev).sum(axis=1)).max()) / lam
    if (~act).any():
        gi = g[~act]
        inactive = float(np.sqrt((gi * gi).sum(axis=1)).max()) / lam
    return active, inactive


def _kkt_ok(Z, r, beta, lam, h, kkt_tol):
    g = 2.0 * (Z.T @ r).reshape(-1, h)
    B = beta.reshape(-1, h)
    norms = np.sqrt((B * B).sum(axis=1))
    act = norms > 0
    if act.any():
        dev = g[act] - lam * B[act] / norms[act, None]
        if (dev * dev).sum(axis=1).max() > (kkt_tol * lam) ** 2:
            return False
    gi = g[~act]
    return not gi.size or (gi * gi).sum(axis=1).max() <= (lam * (1.0 + kkt_tol)) ** 2


def group_lasso_solve(
    design,
    y,
    lam: float,
    warm_start=None,
    *,
    h_n: int | None = None,
    tol: float = 1e-6,
    max_iter: int = 10000,
    kkt_tol: float | None = 1e-4,
    lipschitz: float | None = None,
    accelerate: bool = True,
    record_history: bool = False,
) -> SolveResult:
    """Minimize the group-lasso objective at a single penalty ``lam``.

    Stops when the relative objective decrease of an accepted step falls to
    ``tol`` and, unless ``kkt_tol`` is None, the optimality residuals of
    ``kkt_residuals`` are within ``kkt_tol``. If ``max_iter`` is hit first, the best iterate is returned with
    ``converged=False`` and a ``ConvergenceWarning``.
    """
    if lam <= 0:
        raise ValueError("penalty must be positive")
    Z = _as_matrix(design)
    h = h_n if h_n is not None else design.h_n
    y = np.asarray(y, dtype=float)
    P = Z.shape[1]
    if lam >= lambda_max(Z, y, h):
        # beta = 0 satisfies the optimality conditions; return it exactly
        # rather than through a rounding-prone prox step
        r0 = float(y @ y)
        return SolveResult(np.zeros(P), r0, 0, True, [r0] if record_history else [])
    beta = np.zeros(P) if warm_start is None else np.array(warm_start, dtype=float)
    L =lipschitz if lipschitz is not None else largest_eigenvalue(Z)
    step = 1.0 / L if L > 0 else 1.0

    def penalty(b):
        bb = b.reshape(-1, h)
        return lam * np.sqrt((bb * bb).sum(axis=1)).sum()

    r = y - Z @ beta
    F = float(r @ r) + penalty(beta)
    history = [F] if record_history else []
    prev, r_prev = beta, r
    t_k = 1.0
    point, r_point, plain = beta, r, True
    converged = False
    stalled = False
    since_check = 0
    it = 0
    for it in range(1, max_iter + 1):
        f_point = float(r_point @ r_point)
        grad = -2.0 * (Z.T @ r_point)
        # backtracking until the quadratic upper bound holds at the candidate
        while True:
            cand = group_soft_threshold(point - step * grad, lam * step, h)
            diff = cand - point
            r_cand = y - Z @ cand
            f_cand = float(r_cand @ r_cand)
            bound = f_point + grad @ diff + (diff @ diff) / (2.0 * step)
            if f_cand <= bound + 1e-12 * abs(f_point):
                break
            step *= 0.5
        F_cand = f_cand + penalty(cand)
        if F_cand > F:
            # momentum overshot; a plain step from beta cannot increase F
            if plain:
                converged = True
                break
            t_k = 1.0
            point, r_point, plain = beta, r, True
            continue
        decrease = F - F_cand
        prev, r_prev = beta, r
        beta, r = cand, r_cand
        F_old, F = F, F_cand
        if record_history:
            history.append(F)
        if decrease <= tol * max(abs(F_old), 1e-300):
            stalled = True
        if stalled:
            if kkt_tol is not None:
                since_check += 1
                if since_check >= 5 or plain:
                    since_check = 0
                    if _kkt_ok(Z, r, beta, lam, h, kkt_tol):
                        converged = True
                        break
            elif plain:
                converged = True
                break
            else:
                # a stall under momentum is confirmed with a plain step
                stalled = False
                t_k = 1.0
                point, r_point, plain = beta, r, True
                continue
        if accelerate:
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_k * t_k))
            mom = (t_k - 1.0) / t_next
            t_k = t_next
            point = beta + mom * (beta - prev)
            r_point = r + mom * (r - r_prev)
            plain = mom == 0.0
        else:
            point, r_point = beta, r
    else:
        warnings.warn(
            f"group lasso did not converge in {max_iter} iterations (lam={lam:.4g})",
            ConvergenceWarning,
            stacklevel=2,
        )
    return SolveResult(beta=beta, objective=F, n_iter=it, converged=converged, history=history)


def support_of(beta, h_n: int) -> tuple:
    blocks = beta.reshape(-1, h_n)
    norms = np.sqrt((blocks * blocks).sum(axis=1))
    total = float(np.linalg.norm(beta))
    if total == 0:
        return ()
    return tuple(int(j) for j in np.flatnonzero(norms > SUPPORT_TOL * total))


def lambda_grid(lmax: float, config: PathConfig) -> np.ndarray:
    return lmax * config.grid_ratio ** (np.arange(config.grid_size) / (config.grid_size - 1))


def solution_path(design, y, config: PathConfig = PathConfig(), *, h_n=None, max_support=None):
    """Distinct supports along a decreasing log-spaced penalty grid.

    Each solve is warm-started from the previous one and restricted to the
    blocks kept by the sequential strong rule; blocks violating the
    optimality conditions of the full problem are added back and the solve
    repeated, so every recorded solution is certified on the full design.

    With ``max_support`` set, the path stops at the first support larger than
    that, since models that large cannot be refit anyway.
    """
    Z = _as_matrix(design)
    h = h_n if h_n is not None else design.h_n
    y = np.asarray(y, dtype=float)
    lmax = lambda_max(Z, y, h)
    if lmax == 0:
        return [Model((), h)]
    kkt_slack = 1.0 + 1e-4
    models = []
    seen = set()
    beta = np.zeros(Z.shape[1])
    r = y.copy()
    lam_prev = lmax
    for lam in lambda_grid(lmax, config):
        gnorm = _block_norms(2.0 * (Z.T @ r), h)
        working = (gnorm >= 2.0 * lam - lam_prev) | (_block_norms(beta, h) > 0)
        while True:
            cols = _block_columns(np.flatnonzero(working), h)
            if cols.size:
                Zw = Z[:, cols]
                res = group_lasso_solve(
                    Zw, y, lam, beta[cols], h_n=h, tol=config.tol,
                    max_iter=config.max_iter, lipschitz=largest_eigenvalue(Zw, n_iter=30),
                    accelerate=config.accelerate,
                )
                beta = np.zeros(Z.shape[1])
                beta[cols] = res.beta
                r = y - Zw @ res.beta
            else:
                beta = np.zeros(Z.shape[1])
                r = y.copy()
            gnorm = _block_norms(2.0 * (Z.T @ r), h)
            violators = (~working) & (gnorm > lam * kkt_slack)
            if not violators.any() or working.all():
                break
            working |= violators
        lam_prev = lam
        supp = support_of(beta, h)
        if max_support is not None and len(supp) > max_support:
            break
        if supp not in seen:
            seen.add(supp)
            models.append(Model(supp, h))
    return models


def _block_norms(v, h):
    b = v.reshape(-1, h)
    return np.sqrt((b * b).sum(axis=1))


def _block_columns(blocks, h):
    if len(blocks) == 0:
        return np.zeros(0, dtype=int)
    return (np.asarray(blocks)[:, None] * h + np.arange(h)).reshape(-1)


@dataclass
class CandidateModels:
    models: list
    provenance: list  # -1 for the original data, b for bootstrap resample b
    fits: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.models)

    def __iter__(self):
        return iter(self.models)


def collect_candidates(design, y, config: PathConfig, rng: RngStream) -> CandidateModels:
    """Union of path supports on the data and ``bootstrap_B`` case resamples.

    Inadmissible models (too many coefficients, rank-deficient or exactly
    interpolating refits on the original data) are dropped; the empty model
    is always kept.
    """
    Z = design.values
    y = np.asarray(y, dtype=float)
    n = Z.shape[0]
    h = design.h_n
    cap = (n - MIN_RESID_DF) // h
    tss = float(y @ y)

    order = []
    provenance = {}

    def add(models, source):
        for m in models:
            if m not in provenance:
                provenance[m] = source
                order.append(m)

    add([Model((), h)], -1)
    add(solution_path(Z, y, config, h_n=h, max_support=cap), -1)
    for b in range(config.bootstrap_B):
        idx = rng.generator.integers(0, n, size=n)
        Zb = Z[idx]
        Zb = Zb - Zb.mean(axis=0)
        yb = y[idx] - y[idx].mean()
        add(solution_path(Zb, yb, config, h_n=h, max_support=cap), b)

    kept, prov, fits = [], [], {}
    for m in order:
        try:
            fit = fit_ols(design, y, m)
        except (AdmissibilityError, RankDeficiencyError):
            continue
        if fit.rss <= 1e-14 * tss:
            continue
        kept.append(m)
        prov.append(provenance[m])
        fits[m] = fit
    return CandidateModels(models=kept, provenance=prov, fits=fits)

