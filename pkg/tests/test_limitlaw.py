import math

import numpy as np
import pytest
from scipy.optimize import brentq

from circot._parallel import stream
from circot.core import StepFunction, discretize_distribution
from circot.distributions import CircularDistribution, Uniform, VonMises, WrappedCauchy
from circot.limitlaw import (
    AssumptionError,
    IntersectionSet,
    find_intersections,
    limit_statistic,
    mc_limit_sample,
    mc_quantile,
    sample_bridge,
    sample_bridges,
    sigma_closed_form,
    sigma_monte_carlo,
    sigma_quadrature,
    sign_profile,
    two_sample_variance,
)

HALF = StepFunction([0.0, 0.5], [1.0, -1.0])
HALF_CROSSING = IntersectionSet(np.array([0.5]), np.array([-1.0]), 0.0)
# Var int H B for the uniform bridge with H = +1 then -1 on the two halves:
# int int H H min(s, t) = 1/12, (int H t)^2 = 1/16
HALF_VARIANCE = 1 / 48


class SineCubed(CircularDistribution):
    """CDF ``t + a sin^3(2 pi t)``; it touches the uniform CDF with zero slope."""

    def __init__(self, a=0.05):
        self.a = a

    def _density(self, t):
        w = 2 * np.pi * t
        return 1 + 6 * np.pi * self.a * np.sin(w) ** 2 * np.cos(w)

    def _cdf(self, t):
        return t + self.a * np.sin(2 * np.pi * t) ** 3


class HalfFlat(CircularDistribution):
    """Uniform on the first half of the circle, perturbed on the second."""

    def _density(self, t):
        return np.where(t < 0.5, 1.0, 1.0 + 0.5 * np.sin(4 * np.pi * t))

    def _cdf(self, t):
        bump = 0.5 * (1 - np.cos(4 * np.pi * (t - 0.5))) / (4 * np.pi)
        return np.where(t < 0.5, t, t + bump)


# -- bridges and the limit statistic ---------------------------------------


def test_bridge_covariance_matches_kernel():
    D = 8
    F = discretize_distribution(VonMises(0.3, 1.5), D)
    paths = sample_bridges(F, stream(3), 200_000)
    f = F.values
    kernel = np.minimum.outer(f, f) - np.outer(f, f)
    assert np.max(np.abs(np.cov(paths, rowvar=False) - kernel)) < 4e-3
    assert np.allclose(paths[:, -1], 0.0, atol=1e-12)


def test_uniform_bridge_midpoint_variance():
    paths = sample_bridges(discretize_distribution(Uniform(), 2), stream(4), 100_000)
    assert np.var(paths[:, 0]) == pytest.approx(0.25, abs=0.005)


def test_limit_statistic_is_grid_cot_of_path():
    path = sample_bridge(discretize_distribution(Uniform(), 11), stream(5))
    v = path.values
    med = np.sort(v)[5]
    assert limit_statistic(path) == pytest.approx(np.mean(np.abs(v - med)), abs=1e-15)
    # invariant under adding a constant
    assert limit_statistic(v + 0.3) == pytest.approx(limit_statistic(v), abs=1e-14)


def test_mc_quantile_rank_rule():
    x = np.arange(1, 101, dtype=float)
    assert mc_quantile(x, 0.05) == 95.0
    assert mc_quantile(x, 0.1) == 90.0
    assert mc_quantile(np.arange(1, 1_000_001, dtype=float), 0.05) == 950_000.0
    assert mc_quantile(x, 0.999) == 1.0
    with pytest.raises(ValueError):
        mc_quantile(x, 0.0)


def test_mc_limit_sample_deterministic_across_threads():
    a = mc_limit_sample(Uniform(), D=200, N=5000, seed=9, threads=1)
    b = mc_limit_sample(Uniform(), D=200, N=5000, seed=9, threads=4)
    c = mc_limit_sample(Uniform(), D=200, N=5000, seed=10, threads=1)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_limit_mean_stable_in_D():
    # the grid statistic converges in D; coarse and fine grids agree to MC accuracy
    coarse = mc_limit_sample(Uniform(), D=250, N=20_000, seed=1)
    fine = mc_limit_sample(Uniform(), D=2000, N=20_000, seed=2)
    se = math.hypot(coarse.std(), fine.std()) / math.sqrt(20_000)
    assert abs(coarse.mean() - fine.mean()) < 4 * se + 2e-3


# -- crossings --------------------------------------------------------------


def reference_crossings(mu, nu, M=400_000):
    t = (np.arange(M) + 0.5) / M
    g = mu.cdf(t) - nu.cdf(t)
    c = float(np.median(g))
    grid = np.arange(2001) / 2000
    s = mu.cdf(grid) - nu.cdf(grid) - c
    roots = []
    for i in range(2000):
        if abs(s[i]) < 1e-12:
            roots.append(grid[i])
        elif s[i] * s[i + 1] < 0 and abs(s[i + 1]) >= 1e-12:
            roots.append(brentq(lambda x: mu.cdf(x) - nu.cdf(x) - c, grid[i], grid[i + 1], xtol=1e-13))
    return np.sort(np.mod(roots, 1.0)), c


@pytest.mark.parametrize(
    "mu, nu",
    [
        (VonMises(0.5, 1.0), Uniform()),
        (VonMises(0.25, 2.0), VonMises(0.75, 2.0)),
        (WrappedCauchy(0.5, 0.3), Uniform()),
        (VonMises(0.3, 1.0), VonMises(0.6, 3.0)),
    ],
)
def test_crossings_match_reference(mu, nu):
    inter = find_intersections(mu, nu)
    ref, c = reference_crossings(mu, nu)
    assert inter.levmed == pytest.approx(c, abs=1e-6)
    assert len(inter) == ref.size
    d = np.abs(inter.points[:, None] - np.unique(np.round(ref, 9))[None, :])
    d = np.minimum(d, 1 - d)
    assert np.all(d.min(axis=1) < 1e-6) and np.all(d.min(axis=0) < 1e-6)
    H = sign_profile(inter)
    # the level median splits the circle into equal halves
    assert np.sum(H.values * H.lengths) == pytest.approx(0.0, abs=1e-6)


def test_symmetric_pair_crossings():
    inter = find_intersections(VonMises(0.25, 2.0), VonMises(0.75, 2.0))
    assert np.allclose(inter.points, [0.25, 0.75], atol=1e-8)


def test_zero_slope_crossing_is_reported():
    with pytest.raises(AssumptionError, match="A3") as err:
        find_intersections(SineCubed(), Uniform())
    assert "t = 0" in str(err.value) or "t = 0.5" in str(err.value)


def test_flat_difference_is_reported():
    with pytest.raises(AssumptionError):
        find_intersections(Uniform(), Uniform())
    with pytest.raises(AssumptionError, match="A2"):
        find_intersections(HalfFlat(), Uniform())


# -- variance ---------------------------------------------------------------


def test_variance_closed_form_on_analytic_case():
    assert sigma_closed_form(Uniform(), HALF_CROSSING, H=HALF) == pytest.approx(HALF_VARIANCE, abs=1e-12)
    assert sigma_quadrature(Uniform(), HALF) == pytest.approx(HALF_VARIANCE, abs=1e-6)


def test_variance_monte_carlo_on_analytic_case():
    var, se = sigma_monte_carlo(Uniform(), HALF, N=40_000, D=500, seed=2)
    assert abs(var - HALF_VARIANCE) < 4 * se


@pytest.mark.parametrize(
    "mu, nu",
    [(VonMises(0.5, 1.0), Uniform()), (VonMises(0.3, 1.0), VonMises(0.6, 3.0))],
)
def test_closed_form_matches_quadrature(mu, nu):
    inter = find_intersections(mu, nu)
    H = sign_profile(inter)
    assert sigma_closed_form(mu, inter) == pytest.approx(sigma_quadrature(mu, H), abs=1e-4)


def test_sign_profile_requires_alternation():
    bad = IntersectionSet(np.array([0.2, 0.6]), np.array([1.0, 1.0]), 0.0)
    with pytest.raises(AssumptionError):
        sign_profile(bad)


def test_two_sample_variance():
    assert two_sample_variance(0.04, 0.09, 0.25) == pytest.approx(0.5 * 0.04 + math.sqrt(0.75) * 0.09)
    with pytest.raises(ValueError):
        two_sample_variance(1.0, 1.0, 1.0)
