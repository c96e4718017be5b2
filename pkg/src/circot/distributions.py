"""Analytic circular distributions on ``[0, 1)`` (angles in turns).

Every family exposes ``density``, ``cdf`` (with ``F(t) = mu([0, t])``),
``quantile`` and ``sample``. Samplers only ever draw from the generator
they are handed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special, stats

from .core import grid_points, wrap

__all__ = [
    "CircularDistribution",
    "Uniform",
    "VonMises",
    "Stephens",
    "WrappedCauchy",
    "Cardioid",
    "parse_distribution",
]

TWO_PI = 2.0 * math.pi


def _check_unit(x, name: str, hi_open: bool = False):
    x = np.asarray(x, dtype=float)
    bad = (x < 0) | (x >= 1 if hi_open else x > 1) | ~np.isfinite(x)
    if np.any(bad):
        rng = "[0, 1)" if hi_open else "[0, 1]"
        raise ValueError(f"{name} must lie in {rng}")
    return x


def _scalar(out, like):
    return float(out) if np.ndim(like) == 0 else out


class CircularDistribution:
    """Shared behaviour of the analytic families.

    Subclasses provide ``_density`` and ``_cdf`` on validated inputs and may
    override ``_quantile`` / ``sample`` when closed forms exist.
    """

    has_closed_quantile = False

    def density(self, t):
        t = wrap(t)
        return _scalar(self._density(np.asarray(t, dtype=float)), t)

    def cdf(self, t):
        t = _check_unit(t, "t")
        return _scalar(np.clip(self._cdf(t), 0.0, 1.0), t)

    def quantile(self, p):
        p = _check_unit(p, "p")
        return _scalar(wrap(self._quantile(p)), p)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return wrap(self._quantile(rng.random(n)))

    def grid_cdf(self, D: int) -> np.ndarray:
        return _grid_cdf_cached(self, int(D))

    def _quantile(self, p: np.ndarray) -> np.ndarray:
        # monotone bisection on the CDF
        lo = np.zeros_like(p)
        hi = np.ones_like(p)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            below = self._cdf(mid) < p
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)


@lru_cache(maxsize=256)
def _grid_cdf_cached(dist: CircularDistribution, D: int) -> np.ndarray:
    vals = np.clip(dist._cdf(grid_points(D)), 0.0, 1.0)
    vals = np.maximum.accumulate(vals)
    vals.setflags(write=False)
    return vals


@dataclass(frozen=True)
class Uniform(CircularDistribution):
    has_closed_quantile = True

    def _density(self, t):
        return np.ones_like(t)

    def _cdf(self, t):
        return np.array(t, dtype=float)

    def _quantile(self, p):
        return np.array(p, dtype=float)

    def sample(self, rng, n):
        return rng.random(n)

    def __str__(self):
        return "uniform"


@dataclass(frozen=True)
class VonMises(CircularDistribution):
    """Density ``exp(kappa cos(2 pi (t - theta))) / I0(kappa)`` on turns.

    The CDF and the sampler come from scipy and numpy, mapped from radians
    centred at zero onto turns starting at the origin.
    """

    theta: float = 0.0
    kappa: float = 0.0

    def __post_init__(self):
        if not (self.kappa >= 0 and math.isfinite(self.kappa)):
            raise ValueError("kappa must be finite and >= 0")
        object.__setattr__(self, "theta", float(wrap(self.theta)))
        object.__setattr__(self, "kappa", float(self.kappa))

    def _density(self, t):
        # exp(kappa cos) / I0 == exp(kappa (cos - 1)) / I0e, safe for large kappa
        return np.exp(self.kappa * (np.cos(TWO_PI * (t - self.theta)) - 1.0)) / special.i0e(self.kappa)

    def _cdf(self, t):
        if self.kappa == 0:
            return np.array(t, dtype=float)
        # scipy's CDF is continued periodically, cdf(x + 2 pi) = cdf(x) + 1
        G = stats.vonmises(self.kappa).cdf
        return G(TWO_PI * (np.asarray(t) - self.theta)) - G(-TWO_PI * self.theta)

    def sample(self, rng, n):
        if self.kappa == 0:
            return rng.random(n)
        return wrap(rng.vonmises(0.0, self.kappa, n) / TWO_PI + self.theta)

    def __str__(self):
        return f"vonmises:{self.theta:g},{self.kappa:g}"


@dataclass(frozen=True)
class Stephens(CircularDistribution):
    """Stephens' multimodal family: ``M`` identical lobes of power ``L - 1``.

    On the first lobe the density is ``L (2 M x)^(L-1)`` up to ``1/(2M)`` and
    mirrored after; it repeats with period ``1/M``. ``L = 1`` is uniform.
    """

    M: int = 1
    L: float = 1.0
    has_closed_quantile = True

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise ValueError("M must be a positive integer")
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ValueError("L must be positive")
        object.__setattr__(self, "M", int(self.M))
        object.__setattr__(self, "L", float(self.L))

    def _density(self, x):
        M, L = self.M, self.L
        r = x - np.floor(x * M) / M
        u = 2.0 * M * np.where(r < 0.5 / M, r, 1.0 / M - r)
        return L * u ** (L - 1.0)

    def _cdf(self, x):
        M, L = self.M, self.L
        k = np.minimum(np.floor(x * M), M - 1)
        r = x - k / M
        rising = (2.0 * M * r) ** L / (2.0 * M)
        falling = 1.0 / M - (2.0 - 2.0 * M * r).clip(min=0.0) ** L / (2.0 * M)
        return k / M + np.where(r < 0.5 / M, rising, falling)

    def _quantile(self, p):
        M, L = self.M, self.L
        k = np.minimum(np.floor(p * M), M - 1)
        r = p - k / M
        rising = (2.0 * M * r).clip(min=0.0) ** (1.0 / L) / (2.0 * M)
        falling = (2.0 - (2.0 - 2.0 * M * r).clip(min=0.0) ** (1.0 / L)) / (2.0 * M)
        return k / M + np.where(r < 0.5 / M, rising, falling)

    def __str__(self):
        return f"stephens:{self.M:d},{self.L:g}"


@dataclass(frozen=True)
class WrappedCauchy(CircularDistribution):
    """Density ``(1 - rho^2) / (1 + rho^2 - 2 rho cos(2 pi (t - theta)))``."""

    theta: float = 0.0
    rho: float = 0.0
    has_closed_quantile = True

    def __post_init__(self):
        if not (0.0 <= self.rho < 1.0):
            raise ValueError("rho must lie in [0, 1)")
        object.__setattr__(self, "theta", float(wrap(self.theta)))
        object.__setattr__(self, "rho", float(self.rho))

    @property
    def _c(self) -> float:
        return (1.0 + self.rho) / (1.0 - self.rho)

    def _density(self, t):
        r = self.rho
        return (1.0 - r * r) / (1.0 + r * r - 2.0 * r * np.cos(TWO_PI * (t - self.theta)))

    def _antideriv(self, u):
        # continuous antiderivative on R, A(u + 1) = A(u) + 1
        k = np.floor(u + 0.5)
        return k + np.arctan(self._c * np.tan(math.pi * (u - k))) / math.pi

    def _cdf(self, t):
        return self._antideriv(t - self.theta) - self._antideriv(-self.theta)

    def _quantile(self, p):
        a = p + self._antideriv(-self.theta)
        k = np.floor(a + 0.5)
        u = k + np.arctan(np.tan(math.pi * (a - k)) / self._c) / math.pi
        return u + self.theta

    def __str__(self):
        return f"wrappedcauchy:{self.theta:g},{self.rho:g}"


@dataclass(frozen=True)
class Cardioid(CircularDistribution):
    """Density ``1 + 2 rho cos(2 pi (t - theta))`` with ``|rho| <= 1/2``."""

    theta: float = 0.0
    rho: float = 0.0

    def __post_init__(self):
        if not (-0.5 <= self.rho <= 0.5):
            raise ValueError("rho must lie in [-1/2, 1/2]")
        object.__setattr__(self, "theta", float(wrap(self.theta)))
        object.__setattr__(self, "rho", float(self.rho))

    def _density(self, t):
        return 1.0 + 2.0 * self.rho * np.cos(TWO_PI * (t - self.theta))

    def _cdf(self, t):
        s = np.sin(TWO_PI * (t - self.theta)) + math.sin(TWO_PI * self.theta)
        return t + self.rho / math.pi * s

    def __str__(self):
        return f"cardioid:{self.theta:g},{self.rho:g}"


def parse_distribution(spec: str) -> CircularDistribution:
    """Build a distribution from ``name[:p1,p2]``.

    Accepted names: ``uniform``, ``vonmises:theta,kappa``,
    ``stephens:M,L``, ``wrappedcauchy:theta,rho``, ``cardioid:theta,rho``.
    """
    name, _, params = spec.strip().partition(":")
    name = name.lower().replace("_", "").replace("-", "")
    try:
        args = [float(p) for p in params.split(",")] if params else []
    except ValueError as exc:
        raise ValueError(f"bad parameters in {spec!r}") from exc
    families = {
        "uniform": (Uniform, 0),
        "unif": (Uniform, 0),
        "vonmises": (VonMises, 2),
        "stephens": (Stephens, 2),
        "wrappedcauchy": (WrappedCauchy, 2),
        "cardioid": (Cardioid, 2),
    }
    if name not in families:
        raise ValueError(f"unknown distribution {name!r}")
    cls, nargs = families[name]
    if len(args) != nargs:
        raise ValueError(f"{name} takes {nargs} parameters, got {len(args)}")
    if cls is Stephens:
        if args[0] != int(args[0]):
            raise ValueError("Stephens M must be an integer")
        return Stephens(int(args[0]), args[1])
    return cls(*args)
