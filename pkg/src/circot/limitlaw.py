"""Limit laws of the empirical COT distance.

Under ``mu = nu`` the scaled distance ``sqrt(n) COT(mu_n, mu)`` converges to
``int |B(t) - LevMed(B)| dt`` for the ``F_mu``-Brownian bridge ``B``; this is
simulated on the grid ``i/D``. Under ``mu != nu`` the limit is centred
Gaussian with variance ``Var[int H(t) B(t) dt]`` where ``H`` is the sign of
``F_mu - F_nu - LevMed(F_mu - F_nu)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from ._parallel import blocks, pmap, stream
from .core import GridCDF, StepFunction, discretize_distribution, lower_median
from .distributions import CircularDistribution

__all__ = [
    "AssumptionError",
    "BridgePath",
    "IntersectionSet",
    "SignProfile",
    "sample_bridge",
    "sample_bridges",
    "limit_statistic",
    "limit_statistics",
    "mc_limit_sample",
    "mc_quantile",
    "find_intersections",
    "sign_profile",
    "sigma_closed_form",
    "sigma_quadrature",
    "sigma_monte_carlo",
    "two_sample_variance",
]

SLOPE_TOL = 1e-6
FLAT_TOL = 1e-8
BLOCK = 2000

SignProfile = StepFunction


class AssumptionError(ValueError):
    """Raised when a regularity condition for the Gaussian limit fails."""


@dataclass(frozen=True)
class BridgePath:
    values: np.ndarray

    @property
    def resolution(self) -> int:
        return self.values.size


def _as_grid(F, D: int | None = None) -> GridCDF:
    if isinstance(F, GridCDF):
        if D is not None and F.resolution != D:
            raise ValueError(f"grid has resolution {F.resolution}, expected {D}")
        return F
    if isinstance(F, CircularDistribution):
        return discretize_distribution(F, 1000 if D is None else D)
    raise TypeError(f"expected GridCDF or CircularDistribution, got {type(F).__name__}")


def _as_callable(F) -> Callable:
    if isinstance(F, CircularDistribution):
        return lambda t: F.cdf(np.clip(t, 0.0, 1.0))
    if callable(F):
        return F
    raise TypeError(f"cannot evaluate {type(F).__name__} as a CDF")


def sample_bridges(F: GridCDF, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` paths of the ``F``-Brownian bridge at ``i/D``, shape ``(size, D)``.

    ``B(i/D) = W(F(i/D)) - F(i/D) W(1)`` with ``W`` built from independent
    Gaussian increments of variance ``F(i/D) - F((i-1)/D)``.
    """
    if not F.is_cdf:
        raise ValueError("bridge simulation needs a CDF grid")
    f = F.values
    sd = np.sqrt(np.diff(f, prepend=0.0))
    z = rng.standard_normal((size, f.size))
    z *= sd
    w = np.cumsum(z, axis=1)
    return w - f * w[:, -1:]


def sample_bridge(F: GridCDF, rng: np.random.Generator) -> BridgePath:
    return BridgePath(sample_bridges(F, rng, 1)[0])


def limit_statistics(paths: np.ndarray) -> np.ndarray:
    """``(1/D) sum_i |B(i/D) - med|`` per row, ``med`` the lower median."""
    paths = np.atleast_2d(paths)
    med = lower_median(paths, axis=1)
    return np.mean(np.abs(paths - med[:, None]), axis=1)


def limit_statistic(path: BridgePath | np.ndarray) -> float:
    values = path.values if isinstance(path, BridgePath) else np.asarray(path, dtype=float)
    return float(limit_statistics(values[None, :])[0])


def mc_limit_sample(
    null: CircularDistribution | GridCDF,
    D: int = 1000,
    N: int = 100_000,
    seed: int = 0,
    threads: int = 1,
) -> np.ndarray:
    """``N`` independent draws of the discretized limit statistic under ``null``.

    Draws come in blocks of fixed size; block ``j`` uses sub-stream
    ``(seed, j)`` so the output does not depend on ``threads``.
    """
    if N < 1:
        raise ValueError("N must be positive")
    F = _as_grid(null, D)

    def run(job):
        j, (a, b) = job
        return limit_statistics(sample_bridges(F, stream(seed, j), b - a))

    return np.concatenate(pmap(run, enumerate(blocks(N, BLOCK)), threads))


def mc_quantile(samples, alpha: float) -> float:
    """Order statistic of rank ``ceil((1 - alpha) N)`` (1-based)."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    x = np.asarray(samples, dtype=float).ravel()
    N = x.size
    # the 1e-9 guard keeps e.g. 0.95 * 1e6 from rounding up to the next rank
    k = min(max(math.ceil((1.0 - alpha) * N - 1e-9), 1), N)
    return float(np.partition(x, k - 1)[k - 1])


@dataclass(frozen=True)
class IntersectionSet:
    """Crossings of ``F_mu - F_nu`` with its level median on the circle."""

    points: np.ndarray
    slopes: np.ndarray
    levmed: float

    def __len__(self) -> int:
        return self.points.size


def _level_from_grid(g: np.ndarray) -> float:
    """Level median of the piecewise-linear interpolant of cyclic values ``g``."""
    lo, hi = g, np.roll(g, -1)
    h = 1.0 / g.size

    def below(c):
        a, b = np.minimum(lo, hi), np.maximum(lo, hi)
        span = np.where(b > a, b - a, 1.0)
        frac = np.where(b > a, np.clip((c - a) / span, 0.0, 1.0), (a <= c).astype(float))
        return h * frac.sum() - 0.5

    start = float(lower_median(g))
    if below(start) == 0.0:
        return start
    return brentq(below, float(g.min()), float(g.max()), xtol=1e-15, rtol=1e-15)


def find_intersections(
    mu: CircularDistribution,
    nu: CircularDistribution,
    D: int = 10_000,
    slope_tol: float = SLOPE_TOL,
    flat_tol: float = FLAT_TOL,
    xtol: float = 1e-10,
) -> IntersectionSet:
    """Locate where ``F_mu - F_nu`` crosses its level median.

    Sign changes are found on the grid ``k/D`` (cyclically, so a crossing at
    the origin is found too) and refined by bisection on the analytic CDFs.
    Raises :class:`AssumptionError` if a crossing has slope at most
    ``slope_tol`` or the difference is flat over a run of grid cells.
    """
    t = np.arange(D) / D
    g = mu.cdf(t) - nu.cdf(t)
    if np.max(np.abs(g)) <= flat_tol:
        raise AssumptionError("the two distributions coincide on the grid")
    cell_slope = np.abs(np.roll(g, -1) - g) * D
    flat = cell_slope <= flat_tol
    run = flat & np.roll(flat, 1) & np.roll(flat, -1)
    if np.any(run):
        k = int(np.argmax(run))
        raise AssumptionError(f"A2: F_mu - F_nu is flat near t={k / D:.6g}")

    c = _level_from_grid(g)
    pos = g - c >= 0
    brackets = np.flatnonzero(pos != np.roll(pos, -1))
    if brackets.size == 0:
        raise AssumptionError("no crossing of the level median")

    def s(x):
        return mu.cdf(x) - nu.cdf(x) - c

    a = brackets / D
    b = (brackets + 1) / D
    a0, b0 = a.copy(), b.copy()
    sa, sb = s(a), s(b)
    # a crossing sitting on a grid node can look one-sided after re-evaluation
    one_sided = (sa >= 0) == (sb >= 0)
    snap = np.where(np.abs(sa) <= np.abs(sb), a0, b0)
    while np.max(b - a) > xtol:
        m = 0.5 * (a + b)
        sm = s(m)
        same = (sm >= 0) == (sa >= 0)
        a = np.where(same, m, a)
        sa = np.where(same, sm, sa)
        b = np.where(same, b, m)
    roots = np.where(one_sided, snap, 0.5 * (a + b))
    roots = np.sort(np.where(roots >= 1.0, 0.0, roots))
    slopes = np.asarray(mu.density(roots) - nu.density(roots), dtype=float)
    weak = np.abs(slopes) <= slope_tol
    if np.any(weak):
        where = ", ".join(f"{x:.10g}" for x in roots[weak])
        raise AssumptionError(f"A3: zero slope of F_mu - F_nu at crossing t = {where}")
    return IntersectionSet(roots, slopes, float(c))


def sign_profile(inter: IntersectionSet) -> SignProfile:
    """Sign of ``F_mu - F_nu - LevMed`` as a step function on ``[0, 1)``.

    After each crossing the sign equals the sign of the slope there; before
    the first crossing it continues the sign after the last one.
    """
    if len(inter) == 0:
        raise ValueError("empty intersection set")
    signs = np.sign(inter.slopes)
    if len(inter) > 1 and np.any(signs == np.roll(signs, 1)):
        raise AssumptionError("crossing slopes do not alternate in sign")
    bps = np.concatenate(([0.0], inter.points))
    vals = np.concatenate(([signs[-1]], signs))
    if inter.points[0] == 0.0:
        bps, vals = bps[1:], vals[1:]
    return StepFunction(bps, vals)


def _simpson(f: Callable, a: float, b: float, panels: int) -> float:
    if b <= a:
        return 0.0
    x = np.linspace(a, b, panels + 1)
    w = np.ones(panels + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return float((b - a) / (3.0 * panels) * np.dot(w, f(x)))


def sigma_closed_form(
    F_mu,
    inter: IntersectionSet,
    H: SignProfile | None = None,
    panels: int = 64,
) -> float:
    """Asymptotic variance via the panel-sum representation.

    With panels ``[t_i, t_{i+1}]`` between consecutive crossings (``t_0 = 0``,
    ``t_{N+1} = 1``) and ``h_i`` the sign on panel ``i``::

        sum_i  int int_{panel_i^2} F(s ^ s') ds ds'
        + 2 sum_{i>j} h_i h_j (t_{i+1} - t_i) int_{panel_j} F
        - (int_0^1 H F)^2

    Panel integrals use composite Simpson with ``panels`` subintervals.
    """
    if len(inter) == 0:
        raise ValueError("empty intersection set")
    if panels < 2 or panels % 2:
        raise ValueError("panels must be an even number >= 2")
    F = _as_callable(F_mu)
    H = sign_profile(inter) if H is None else H
    t = np.concatenate(([0.0], inter.points, [1.0]))
    h = H(np.clip(0.5 * (t[:-1] + t[1:]), 0.0, np.nextafter(1.0, 0.0)))
    width = np.diff(t)
    I = np.array([_simpson(F, t[i], t[i + 1], panels) for i in range(t.size - 1)])
    # int int_{[a,b]^2} F(min(s, s')) = 2 int_a^b F(s) (b - s) ds
    J = np.array(
        [
            2.0 * _simpson(lambda s, b=t[i + 1]: F(s) * (b - s), t[i], t[i + 1], panels)
            for i in range(t.size - 1)
        ]
    )
    hI = h * I
    # prefix[i] = sum_{j<i} h_j I_j
    prefix = np.concatenate(([0.0], np.cumsum(hI)[:-1]))
    cross = 2.0 * np.sum(h * width * prefix)
    var = J.sum() + cross - hI.sum() ** 2
    return max(float(var), 0.0)


def _cell_means(H: StepFunction, M: int) -> np.ndarray:
    edges = np.append(H.breakpoints, 1.0)
    cum = np.concatenate(([0.0], np.cumsum(H.values * np.diff(edges))))
    return np.diff(np.interp(np.arange(M + 1) / M, edges, cum)) * M


def sigma_quadrature(F_mu, H: SignProfile, M: int = 2000) -> float:
    """Brute-force ``int int H(s) H(s') [F(s ^ s') - F(s) F(s')] ds ds'``.

    Midpoint rule on an ``M x M`` grid with cell-averaged ``H``.
    """
    F = _as_callable(F_mu)
    s = (np.arange(M) + 0.5) / M
    f = F(s)
    kernel = F(np.minimum.outer(s, s)) - np.multiply.outer(f, f)
    w = _cell_means(H, M) / M
    return float(w @ kernel @ w)


def sigma_monte_carlo(
    F_mu,
    H: SignProfile,
    N: int = 100_000,
    D: int = 1000,
    seed: int = 0,
    threads: int = 1,
) -> tuple[float, float]:
    """Sample variance of ``int H B dt`` over ``N`` simulated bridges.

    Returns ``(variance, standard_error)``. The integral uses the trapezoid
    rule on ``i/D`` with cell-averaged ``H``.
    """
    F = _as_grid(F_mu, D)
    w = _cell_means(H, D) / D
    # trapezoid: cell i spans ((i-1)/D, i/D]; B(0) = 0
    coef = 0.5 * w
    coef[:-1] += 0.5 * w[1:]

    def run(job):
        j, (a, b) = job
        return sample_bridges(F, stream(seed, j), b - a) @ coef

    x = np.concatenate(pmap(run, enumerate(blocks(N, BLOCK)), threads))
    dev = (x - x.mean()) ** 2
    var = float(dev.sum() / (N - 1))
    se = float(np.std(dev, ddof=1) / math.sqrt(N))
    return var, se


def two_sample_variance(sigma_mu_nu: float, sigma_nu_mu: float, delta: float) -> float:
    """Two-sample limit variance ``sqrt(delta) s_mu|nu + sqrt(1 - delta) s_nu|mu``.

    This is the combination as printed alongside the two-sample limit. The
    bridge combination ``sqrt(delta) B_mu - sqrt(1 - delta) B_nu`` it is derived
    from would give weights ``delta`` and ``1 - delta`` instead; the printed
    form is kept deliberately.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    return math.sqrt(delta) * sigma_mu_nu + math.sqrt(1.0 - delta) * sigma_nu_mu
