"""Goodness-of-fit testing with COT, bootstrap laws, and uniformity baselines.

All critical values are Monte Carlo order statistics; p-values use the
add-one tail estimator ``(1 + #{draws >= stat}) / (N + 1)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from ._parallel import blocks, pmap, stream
from .core import (
    DiscreteCircularMeasure,
    cot_exact,
    cot_exact_samples,
    cot_grid,
    cot_grid_batch,
    discretize_distribution,
    discretize_measure,
    discretize_samples,
    wrap,
)
from .distributions import CircularDistribution, Uniform
from .limitlaw import mc_limit_sample, mc_quantile

__all__ = [
    "TestResult",
    "BootstrapSpec",
    "NullCalibration",
    "calibrate",
    "cott_one_sample",
    "bootstrap_distribution",
    "cott_two_sample",
    "rayleigh_statistic",
    "kuiper_statistic",
    "watson_statistic",
    "rayleigh_test",
    "kuiper_test",
    "watson_test",
    "power_curve",
    "ks_distance",
    "TESTS",
]

DEFAULT_D = 1000
DEFAULT_N = 100_000


@dataclass(frozen=True)
class TestResult:
    """Outcome of a test; ``reject`` holds exactly when statistic > critical value."""

    statistic: float
    critical_value: float
    p_value: float
    reject: bool
    n: int
    alpha: float
    method: str
    seed: int
    details: dict = field(default_factory=dict)

    __test__ = False  # not a pytest class

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class BootstrapSpec:
    """Resampling plan: ``m_of_n`` (default ``m = ceil(n^0.8)``) or ``n_of_n``."""

    mode: str = "m_of_n"
    m: int | None = None
    B: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("m_of_n", "n_of_n"):
            raise ValueError(f"unknown bootstrap mode {self.mode!r}")
        if self.B < 1:
            raise ValueError("B must be positive")
        if self.m is not None and self.m < 1:
            raise ValueError("m must be positive")

    def resample_size(self, n: int) -> int:
        if self.mode == "n_of_n":
            return n
        m = math.ceil(n**0.8) if self.m is None else self.m
        if m > n:
            raise ValueError(f"m = {m} exceeds the sample size n = {n}")
        return m


@dataclass(frozen=True)
class NullCalibration:
    """Monte Carlo draws of a null statistic, kept sorted."""

    draws: np.ndarray
    D: int
    seed: int
    label: str

    @property
    def N(self) -> int:
        return self.draws.size

    def critical_value(self, alpha: float) -> float:
        return mc_quantile(self.draws, alpha)

    def p_value(self, stat: float) -> float:
        tail = self.N - np.searchsorted(self.draws, stat, side="left")
        return float((1 + tail) / (self.N + 1))


_CALIBRATIONS: dict = {}
_MAX_CALIBRATIONS = 16


def calibrate(
    null: CircularDistribution, D: int = DEFAULT_D, N: int = DEFAULT_N, seed: int = 0, threads: int = 1
) -> NullCalibration:
    """Limit-law draws for ``null``, cached per ``(null, D, N, seed)``.

    The draws do not depend on ``threads``.
    """
    key = (null, int(D), int(N), int(seed))
    cal = _CALIBRATIONS.get(key)
    if cal is None:
        draws = np.sort(mc_limit_sample(null, D=D, N=N, seed=seed, threads=threads))
        draws.setflags(write=False)
        cal = NullCalibration(draws, D, seed, str(null))
        if len(_CALIBRATIONS) >= _MAX_CALIBRATIONS:
            _CALIBRATIONS.pop(next(iter(_CALIBRATIONS)))
        _CALIBRATIONS[key] = cal
    return cal


def _as_sample(sample, minimum: int = 1) -> np.ndarray:
    x = np.asarray(sample, dtype=float).ravel()
    if x.size < minimum:
        raise ValueError(f"need at least {minimum} observation(s), got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError("sample contains non-finite values")
    return wrap(x) if x.size else x


def cott_one_sample(
    sample,
    null: CircularDistribution | None = None,
    alpha: float = 0.05,
    calibration: NullCalibration | None = None,
    D: int = DEFAULT_D,
    N: int = DEFAULT_N,
    seed: int = 0,
    threads: int = 1,
) -> TestResult:
    """COT goodness-of-fit test of ``H0: sample ~ null``.

    Rejects when ``sqrt(n) COT(mu_n, null)`` exceeds the ``1 - alpha``
    quantile of the limit law under ``null``. Pass ``calibration`` to reuse
    precomputed limit draws; otherwise ``N`` draws at grid ``D`` are made
    from ``seed``.
    """
    x = _as_sample(sample)
    null = Uniform() if null is None else null
    if calibration is None:
        calibration = calibrate(null, D, N, seed, threads)
    elif calibration.D != D:
        raise ValueError(f"calibration grid D={calibration.D} does not match D={D}")
    n = x.size
    stat = math.sqrt(n) * cot_grid(
        discretize_measure(DiscreteCircularMeasure(x), D), discretize_distribution(null, D)
    )
    crit = calibration.critical_value(alpha)
    return TestResult(
        statistic=stat,
        critical_value=crit,
        p_value=calibration.p_value(stat),
        reject=bool(stat > crit),
        n=n,
        alpha=alpha,
        method="cott",
        seed=calibration.seed,
        details={"null": str(null), "D": D, "N": calibration.N},
    )


def _row_block(width: int, budget: int = 2_000_000) -> int:
    return max(1, budget // max(width, 1))


def bootstrap_distribution(
    sample,
    spec: BootstrapSpec,
    null: CircularDistribution | None = None,
    D: int = DEFAULT_D,
    threads: int = 1,
) -> np.ndarray:
    """Bootstrap draws of the scaled COT distance.

    ``m_of_n`` with ``null=None`` gives ``sqrt(m) COT(mu*_{n,m}, mu_n)`` (exact
    COT), which approximates the limit law under ``mu = nu``.
    ``n_of_n`` with a fixed ``null`` gives
    ``sqrt(n) (COT(mu*_{n,n}, null) - COT(mu_n, null))`` on the grid ``D``,
    which approximates the Gaussian limit under ``mu != null``. Other
    pairings are rejected: the naive bootstrap is inconsistent under
    ``mu = nu``.
    """
    x = _as_sample(sample)
    n = x.size
    if spec.mode == "m_of_n" and null is not None:
        raise ValueError("the m-out-of-n bootstrap is paired with the empirical reference")
    if spec.mode == "n_of_n" and null is None:
        raise ValueError("the n-out-of-n bootstrap needs a fixed null distribution")
    m = spec.resample_size(n)

    if spec.mode == "m_of_n":
        xs = np.sort(x)
        rows = _row_block(n + m)

        def run(job):
            j, (a, b) = job
            idx = stream(spec.seed, j).integers(0, n, size=(b - a, m))
            return math.sqrt(m) * cot_exact_samples(xs[idx], xs[None, :])

    else:
        null_grid = discretize_distribution(null, D).values
        base = float(cot_grid_batch(discretize_samples(x, D)[0], null_grid))
        rows = _row_block(max(n, D))

        def run(job):
            j, (a, b) = job
            idx = stream(spec.seed, j).integers(0, n, size=(b - a, n))
            d = cot_grid_batch(discretize_samples(x[idx], D), null_grid)
            return math.sqrt(n) * (d - base)

    return np.concatenate(pmap(run, enumerate(blocks(spec.B, rows)), threads))


def cott_two_sample(
    sample_x,
    sample_y,
    alpha: float = 0.05,
    spec: BootstrapSpec | None = None,
    threads: int = 1,
) -> TestResult:
    """Two-sample COT test of ``H0: mu = nu``.

    The statistic is ``sqrt(nm / (n + m)) COT(mu_n, nu_m)``. Its null law is
    approximated by resampling ``ceil(n^0.8)`` and ``ceil(m^0.8)`` points from
    the pooled sample and recomputing the scaled distance.
    """
    x = _as_sample(sample_x)
    y = _as_sample(sample_y)
    spec = BootstrapSpec() if spec is None else spec
    if spec.mode != "m_of_n":
        raise ValueError("the two-sample test uses the m-out-of-n bootstrap")
    n, m = x.size, y.size
    stat = math.sqrt(n * m / (n + m)) * cot_exact(DiscreteCircularMeasure(x), DiscreteCircularMeasure(y))
    pooled = np.concatenate([x, y])
    nb, mb = math.ceil(n**0.8), math.ceil(m**0.8)
    scale = math.sqrt(nb * mb / (nb + mb))
    rows = _row_block(nb + mb)

    def run(job):
        j, (a, b) = job
        rng = stream(spec.seed, j)
        ix = rng.integers(0, pooled.size, size=(b - a, nb))
        iy = rng.integers(0, pooled.size, size=(b - a, mb))
        return scale * cot_exact_samples(pooled[ix], pooled[iy])

    draws = np.sort(np.concatenate(pmap(run, enumerate(blocks(spec.B, rows)), threads)))
    cal = NullCalibration(draws, 0, spec.seed, "pooled m-out-of-n")
    crit = cal.critical_value(alpha)
    return TestResult(
        statistic=stat,
        critical_value=crit,
        p_value=cal.p_value(stat),
        reject=bool(stat > crit),
        n=n + m,
        alpha=alpha,
        method="cott2",
        seed=spec.seed,
        details={"n_x": n, "n_y": m, "m_x": nb, "m_y": mb, "B": spec.B},
    )


# -- uniformity baselines ---------------------------------------------------


def rayleigh_statistic(x) -> np.ndarray:
    """``2 n Rbar^2`` per row, ``Rbar`` the mean resultant length."""
    x = np.atleast_2d(x)
    ang = 2.0 * np.pi * x
    n = x.shape[1]
    c, s = np.cos(ang).mean(axis=1), np.sin(ang).mean(axis=1)
    return 2.0 * n * (c * c + s * s)


def kuiper_statistic(x) -> np.ndarray:
    """Kuiper's ``V_n = D+ + D-`` against the uniform CDF, per row."""
    u = np.sort(np.atleast_2d(x), axis=1)
    n = u.shape[1]
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - u, axis=1)
    d_minus = np.max(u - (i - 1) / n, axis=1)
    return d_plus + d_minus


def watson_statistic(x) -> np.ndarray:
    """Watson's ``U^2 = n int (F_n(t) - t - mean)^2 dt``, per row.

    Uses the order-statistic form
    ``sum (u_i - (2i-1)/(2n))^2 + 1/(12n) - n (ubar - 1/2)^2``.
    """
    u = np.sort(np.atleast_2d(x), axis=1)
    n = u.shape[1]
    i = np.arange(1, n + 1)
    return (
        np.sum((u - (2 * i - 1) / (2.0 * n)) ** 2, axis=1)
        + 1.0 / (12.0 * n)
        - n * (u.mean(axis=1) - 0.5) ** 2
    )


_BASELINES: dict[str, tuple[Callable, int]] = {
    "rayleigh": (rayleigh_statistic, 1),
    "kuiper": (kuiper_statistic, 2),
    "watson": (watson_statistic, 2),
}


@lru_cache(maxsize=64)
def _baseline_calibration(name: str, n: int, N: int, seed: int) -> NullCalibration:
    fn, _ = _BASELINES[name]
    rows = _row_block(n, 4_000_000)
    tag = list(_BASELINES).index(name) + 1
    draws = np.concatenate(
        [fn(stream(seed, tag, n, j).random((b - a, n))) for j, (a, b) in enumerate(blocks(N, rows))]
    )
    draws = np.sort(draws)
    draws.setflags(write=False)
    return NullCalibration(draws, 0, seed, f"{name} uniform n={n}")


def _baseline_test(name: str, sample, alpha: float, N: int, seed: int) -> TestResult:
    fn, minimum = _BASELINES[name]
    x = _as_sample(sample, minimum)
    stat = float(fn(x[None, :])[0])
    cal = _baseline_calibration(name, x.size, N, seed)
    crit = cal.critical_value(alpha)
    return TestResult(
        statistic=stat,
        critical_value=crit,
        p_value=cal.p_value(stat),
        reject=bool(stat > crit),
        n=x.size,
        alpha=alpha,
        method=name,
        seed=seed,
        details={"null": "uniform", "N": N},
    )


def rayleigh_test(sample, alpha: float = 0.05, N: int = DEFAULT_N, seed: int = 0) -> TestResult:
    return _baseline_test("rayleigh", sample, alpha, N, seed)


def kuiper_test(sample, alpha: float = 0.05, N: int = DEFAULT_N, seed: int = 0) -> TestResult:
    return _baseline_test("kuiper", sample, alpha, N, seed)


def watson_test(sample, alpha: float = 0.05, N: int = DEFAULT_N, seed: int = 0) -> TestResult:
    return _baseline_test("watson", sample, alpha, N, seed)


TESTS = ("cott", "rayleigh", "kuiper", "watson")


def power_curve(
    test: str,
    family: Callable[[float], CircularDistribution],
    params: Sequence[float],
    n: int,
    reps: int,
    alpha: float = 0.05,
    seed: int = 0,
    D: int = DEFAULT_D,
    N: int = DEFAULT_N,
    null: CircularDistribution | None = None,
    threads: int = 1,
) -> list[tuple[float, float]]:
    """Empirical rejection rate of ``test`` at each parameter of ``family``.

    Samples for parameter ``k`` come from sub-stream ``(seed, k, block)``,
    so different tests called with the same seed see identical data.
    Baseline tests only support the uniform null.
    """
    if test not in TESTS:
        raise ValueError(f"unknown test {test!r}; choose from {TESTS}")
    if reps < 1:
        raise ValueError("reps must be positive")
    null = Uniform() if null is None else null
    if test == "cott":
        crit = calibrate(null, D, N, seed).critical_value(alpha)
        null_grid = discretize_distribution(null, D).values

        def statistic(X):
            return math.sqrt(n) * cot_grid_batch(discretize_samples(X, D), null_grid)

    else:
        if not isinstance(null, Uniform):
            raise ValueError(f"{test} only tests uniformity")
        if n < _BASELINES[test][1]:
            raise ValueError(f"{test} needs n >= {_BASELINES[test][1]}")
        crit = _baseline_calibration(test, n, N, seed).critical_value(alpha)
        statistic = _BASELINES[test][0]

    rows = _row_block(max(n, D if test == "cott" else n))

    def rate(job):
        k, p = job
        dist = family(p)
        hits = 0
        for j, (a, b) in enumerate(blocks(reps, rows)):
            X = dist.sample(stream(seed, k, j), (b - a) * n).reshape(b - a, n)
            hits += int(np.count_nonzero(statistic(X) > crit))
        return (float(p), hits / reps)

    return pmap(rate, enumerate(params), threads)


def ks_distance(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov distance from the merged order statistics."""
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    z = np.concatenate([a, b])
    fa = np.searchsorted(a, z, side="right") / a.size
    fb = np.searchsorted(b, z, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))
