"""Random streams and the handful of distribution utilities the pipeline needs."""

from __future__ import annotations

import math

import numpy as np

from .errors import EmptySampleError, InvalidDegreesOfFreedomError

_MASK64 = (1 << 64) - 1


class RngStream:
    """Reproducible random stream keyed by ``(seed, stream_id)``.

    Backed by the counter-based Philox generator. Streams with different
    ``stream_id`` come from independent ``SeedSequence`` spawn keys, so
    replications can be farmed out to workers in any order and still yield
    the same draws.
    """

    def __init__(self, seed: int = 0, stream_id: int = 0):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.Philox(ss))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    def substream(self, key: int) -> "RngStream":
        """Derive a child stream; deterministic in (seed, stream_id, key)."""
        child = RngStream.__new__(RngStream)
        child.seed = self.seed
        child.stream_id = self.stream_id
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, int(key) & _MASK64))
        child.generator = np.random.Generator(np.random.Philox(ss))
        return child


def sample_chi_square(rng: RngStream, df, size=None):
    """Draw from chi-square(df). ``df`` may be an array when ``size`` matches."""
    df_arr = np.asarray(df)
    if np.any(df_arr < 1):
        raise InvalidDegreesOfFreedomError(f"degrees of freedom must be >= 1, got {df}")
    out = rng.generator.chisquare(df, size=size)
    return float(out) if size is None and np.ndim(out) == 0 else out


def sample_std_normal_vec(rng: RngStream, n: int) -> np.ndarray:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return rng.generator.standard_normal(n)


def empirical_quantile(samples, q):
    """Quantile by linear interpolation between order statistics.

    With sorted values ``v[0] <= ... <= v[N-1]`` the position is
    ``h = (N - 1) * q`` (zero based) and the result is
    ``v[floor(h)] + (h - floor(h)) * (v[ceil(h)] - v[floor(h)])``.

    ``samples`` may be 2-D, in which case quantiles are taken along axis 0.
    ``q`` may be a scalar or a sequence.
    """
    v = np.sort(np.asarray(samples, dtype=float), axis=0)
    if v.shape[0] == 0:
        raise EmptySampleError("cannot take a quantile of an empty sample")
    qs = np.atleast_1d(np.asarray(q, dtype=float))
    if np.any((qs < 0) | (qs > 1)) or np.any(np.isnan(qs)):
        raise ValueError(f"quantile level must lie in [0, 1], got {q}")
    n = v.shape[0]
    out = []
    for qi in qs:
        h = (n - 1) * qi
        lo = int(math.floor(h))
        hi = min(lo + 1, n - 1)
        frac = h - lo
        # frac == 0 must return v[lo] exactly, even if v[hi] is inf
        val = v[lo] if frac == 0 else v[lo] + frac * (v[hi] - v[lo])
        out.append(val)
    if np.ndim(q) == 0:
        res = out[0]
        return float(res) if np.ndim(res) == 0 else np.asarray(res)
    return np.asarray(out)


def _gamma_series(a, x):
    # lower regularized P(a, x) by the power series; converges fast for x < a + 1
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(10000):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * 1e-17:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_contfrac(a, x):
    # upper regularized Q(a, x) by the Legendre continued fraction (modified Lentz)
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def regularized_upper_gamma(a: float, x: float) -> float:
    """Q(a, x) = Gamma(a, x) / Gamma(a)."""
    if a <= 0:
        raise ValueError("shape must be positive")
    if x <= 0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_series(a, x)
    return _gamma_contfrac(a, x)


def chi_square_upper_tail(c: float, j: int) -> float:
    """Exact P(chi2_j > c)."""
    if j < 1:
        raise InvalidDegreesOfFreedomError(f"degrees of freedom must be >= 1, got {j}")
    return regularized_upper_gamma(j / 2.0, c / 2.0)


def chi_square_tail_asymptotic(c: float, j: int) -> float:
    """Leading-order large-``c`` approximation of P(chi2_j > c).

    ``(c/2)^(j/2 - 1) * exp(-c/2) / Gamma(j/2)``, evaluated in log space.
    """
    if j < 1:
        raise InvalidDegreesOfFreedomError(f"degrees of freedom must be >= 1, got {j}")
    if c <= 0:
        raise ValueError("c must be positive")
    half = c / 2.0
    return math.exp((j / 2.0 - 1.0) * math.log(half) - half - math.lgamma(j / 2.0))
