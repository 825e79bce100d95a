"""Counting functions and abscissa-of-convergence estimators.

For a compact positive operator with singular values mu_0 >= mu_1 >= ...
the abscissa ``inf{s : tr T^s < oo}`` has three equivalent descriptions:

* ``(liminf log mu_n / log(1/n))^{-1}``
* ``limsup log lambda_{1/n} / log n`` with ``lambda_t = #{n : mu_n > t}``
* the divergence threshold of the partial sums of ``mu_n^s``

Each is estimated here from a finite truncation.  None of them can tell a
liminf from a limsup; fits report their residual so that oscillation shows up
as a poor fit rather than a silently wrong number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class AbscissaEstimate:
    value: float
    method: str
    window: tuple[float, float]
    residual: float = 0.0
    flags: tuple[str, ...] = ()

    @property
    def infinite(self) -> bool:
        return "infinite" in self.flags


def as_sequence(values) -> np.ndarray:
    """Validate and return a non-increasing positive float array."""
    seq = np.asarray(values, dtype=float).ravel()
    if seq.size == 0:
        raise ValueError("empty sequence")
    if np.any(seq <= 0) or not np.all(np.isfinite(seq)):
        raise ValueError("sequence entries must be positive and finite")
    if np.any(np.diff(seq) > 0):
        raise ValueError("sequence must be non-increasing")
    return seq


def tail_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least-squares line through (x, y); returns slope, intercept, rms residual."""
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - A @ coef
    return float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(res**2)))


def counting_lambda(seq, t: float) -> int:
    """lambda_t = #{n : mu_n > t}."""
    if t <= 0:
        raise ValueError("t must be positive")
    s = np.asarray(seq, dtype=float)
    # ascending copy; count of entries strictly greater than t
    asc = s[::-1]
    return int(asc.size - np.searchsorted(asc, t, side="right"))


def abscissa_mu_slope(seq) -> AbscissaEstimate:
    """Invert the tail slope of log mu_n against log(1/(n+1))."""
    mu = as_sequence(seq)
    N = mu.size
    if N < 100:
        raise ValueError("need at least 100 terms")
    n = np.arange(N // 2, N)
    x = -np.log(n + 1.0)
    y = np.log(mu[n])
    slope, _, res = tail_fit(x, y)
    window = (float(N // 2), float(N - 1))
    if slope <= 0:
        return AbscissaEstimate(math.inf, "mu-slope", window, res, ("infinite",))
    value = 1.0 / slope
    flags = ("superpolynomial",) if value < 1e-2 else ()
    return AbscissaEstimate(value, "mu-slope", window, res, flags)


def abscissa_lambda_slope(seq, points: int = 64) -> AbscissaEstimate:
    """Tail slope of log lambda_{1/n} against log n on a log-spaced n grid.

    Only the unsaturated range ``1/mu_0 < n < 1/mu_{N-1}`` carries
    information; the fit uses the upper half of it in log scale.
    """
    mu = as_sequence(seq)
    lo, hi = 1.0 / mu[0], 1.0 / mu[-1]
    if hi <= lo * (1 + 1e-12):
        return AbscissaEstimate(0.0, "lambda-slope", (lo, hi), 0.0, ("finite",))
    a = math.sqrt(lo * hi) if lo > 0 else hi / 2
    a = max(a, 1.0 + 1e-9)
    if hi <= a:
        return AbscissaEstimate(0.0, "lambda-slope", (lo, hi), 0.0, ("finite",))
    # stay strictly inside the range where lambda < N
    grid = np.exp(np.linspace(math.log(a), math.log(hi), points + 1))[:-1]
    asc = mu[::-1]
    lam = asc.size - np.searchsorted(asc, 1.0 / grid, side="right")
    keep = lam > 0
    if keep.sum() < 3:
        return AbscissaEstimate(0.0, "lambda-slope", (a, hi), 0.0, ("finite",))
    slope, _, res = tail_fit(np.log(grid[keep]), np.log(lam[keep]))
    return AbscissaEstimate(max(slope, 0.0), "lambda-slope", (float(a), float(hi)), res)


def abscissa_trace_scan(seq, s_grid, threshold: float = 1.05) -> AbscissaEstimate:
    """Smallest s whose partial-sum ratio S_N(s) / S_{N/2}(s) drops below ``threshold``.

    The reported value is the linear interpolation of the crossing between
    the last failing and the first passing grid points; the grid point itself
    is stored in the window.  This is a truncation heuristic.
    """
    mu = as_sequence(seq)
    s_grid = np.asarray(s_grid, dtype=float)
    if np.any(s_grid <= 0) or np.any(np.diff(s_grid) <= 0):
        raise ValueError("s grid must be positive and increasing")
    N = mu.size
    logmu = np.log(mu)
    ratios = []
    for s in s_grid:
        w = np.exp(s * (logmu - logmu[0]))
        ratios.append(w.sum() / w[: max(N // 2, 1)].sum())
    ratios = np.array(ratios)
    below = np.nonzero(ratios < threshold)[0]
    flags = ("truncation-heuristic",)
    if below.size == 0:
        return AbscissaEstimate(math.inf, "trace-scan", (float(s_grid[0]), float(s_grid[-1])), 0.0, flags + ("infinite",))
    i = int(below[0])
    if i == 0:
        return AbscissaEstimate(float(s_grid[0]), "trace-scan", (float(s_grid[0]), float(s_grid[0])), 0.0, flags + ("grid-floor",))
    r0, r1 = ratios[i - 1], ratios[i]
    frac = (r0 - threshold) / (r0 - r1)
    value = s_grid[i - 1] + frac * (s_grid[i] - s_grid[i - 1])
    return AbscissaEstimate(float(value), "trace-scan", (float(s_grid[i - 1]), float(s_grid[i])), 0.0, flags)


def default_s_grid(upper: float = 6.0, step: float = 0.01) -> np.ndarray:
    return np.round(np.arange(step, upper + step / 2, step), 10)


@dataclass(frozen=True)
class AbscissaSummary:
    mu_slope: AbscissaEstimate
    lambda_slope: AbscissaEstimate
    trace_scan: AbscissaEstimate
    terms: int
    dropped_zeros: int = 0
    notes: tuple[str, ...] = field(default=())

    @property
    def values(self) -> tuple[float, float, float]:
        return (self.mu_slope.value, self.lambda_slope.value, self.trace_scan.value)

    @property
    def spread(self) -> float:
        v = [x for x in self.values if math.isfinite(x)]
        return max(v) - min(v) if v else math.inf

    @property
    def consensus(self) -> float:
        return float(np.median(self.values))


def estimate_all(seq, s_grid=None) -> AbscissaSummary:
    mu = as_sequence(seq)
    if s_grid is None:
        s_grid = default_s_grid()
    return AbscissaSummary(
        abscissa_mu_slope(mu) if mu.size >= 100 else AbscissaEstimate(math.nan, "mu-slope", (0, 0), 0.0, ("too-short",)),
        abscissa_lambda_slope(mu),
        abscissa_trace_scan(mu, s_grid),
        int(mu.size),
    )


def singular_sequence_from_spectrum(eigenvalues) -> np.ndarray:
    """mu_n of (I + D^2)^{-1/2}, sorted non-increasing."""
    lam = np.asarray(eigenvalues, dtype=float)
    return np.sort(1.0 / np.sqrt(1.0 + lam**2))[::-1]


def zeta_value(eigenvalues, s: float) -> float:
    """Truncated tr((I + D^2)^{-s/2}) from the eigenvalues of D."""
    lam = np.asarray(eigenvalues, dtype=float)
    return float(np.sum((1.0 + lam**2) ** (-s / 2.0)))


def counting_N(values, t: float) -> int:
    """#{entries < t} (strict); the counting function of a positive operator."""
    v = np.sort(np.asarray(values, dtype=float))
    return int(np.searchsorted(v, t, side="left"))
