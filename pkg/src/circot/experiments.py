"""Seeded experiment runners that emit plot-ready CSV.

Each runner takes an :class:`ExperimentConfig` and returns an
:class:`ExperimentResult`. The CSV carries ``#``-prefixed header lines with
every config field and a config hash; identical configs give byte-identical
files whatever the thread count.
"""

from __future__ import annotations

import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from ._parallel import blocks, derive_seed, stream
from .core import cot_grid, cot_grid_batch, discretize_distribution, discretize_samples
from .distributions import Stephens, Uniform, VonMises
from .inference import TESTS, BootstrapSpec, bootstrap_distribution, calibrate, ks_distance, power_curve
from .limitlaw import mc_limit_sample

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "default_config",
    "run_table1",
    "run_clt_convergence",
    "run_power_figures",
    "run_cot_curves",
    "run_experiment",
    "EXPERIMENTS",
]

# third-party uniformity tests compared against in the power figures; their
# rows are left empty so externally computed numbers can be merged in
EXTERNAL_TESTS = (
    "rao_range",
    "rao_spacing",
    "pycke_V0.1",
    "pycke_V0.707",
    "pycke_V0.816",
    "pycke_V0.866",
    "pycke_G",
)


def _grid(start: float, stop: float, step: float) -> list[float]:
    k = int(round((stop - start) / step))
    return [round(start + i * step, 10) for i in range(k + 1)]


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int = 0
    D: int = 1000
    N: int = 100_000
    reps: int = 2000
    alpha: float = 0.05
    alphas: tuple = (0.1, 0.05, 0.01)
    m_exponent: float = 0.8
    grids: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["alphas"] = list(self.alphas)
        return d

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        base = default_config(d["experiment"])
        d = dict(d)
        if "alphas" in d:
            d["alphas"] = tuple(d["alphas"])
        if "grids" in d:
            d["grids"] = {**base.grids, **d["grids"]}
        return replace(base, **d)


def default_config(experiment: str, full: bool = False) -> ExperimentConfig:
    """Desk-scale defaults; ``full=True`` switches to paper-scale N and reps."""
    if experiment not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {experiment!r}; choose from {sorted(EXPERIMENTS)}")
    N = 1_000_000 if full else 100_000
    reps = 10_000 if full else 2000
    if experiment == "table1":
        return ExperimentConfig(experiment, N=N, grids={"kappa": [0.0, 0.5, 1.0, 2.0, 3.0]})
    if experiment == "clt":
        return ExperimentConfig(
            experiment, N=N, reps=reps, grids={"n": [3, 10, 30, 100, 300, 1000, 3000]}
        )
    if experiment == "power":
        return ExperimentConfig(
            experiment,
            N=N,
            reps=reps,
            grids={
                "kappa": _grid(0.0, 2.5, 0.1),
                "L": _grid(1.0, 5.0, 0.1),
                "M": [1, 2, 3, 4, 5],
                "n": [30],
                "n_modes": [30, 100],
                "tests": list(TESTS),
                "external_tests": list(EXTERNAL_TESTS),
            },
        )
    return ExperimentConfig(
        experiment,
        D=10_000,
        grids={"kappa": _grid(0.0, 5.0, 0.1), "L": _grid(1.0, 5.0, 0.1), "M": [1, 2, 3]},
    )


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".10g")
    return str(v)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    columns: tuple
    rows: list

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# experiment: {self.config.experiment}\n")
        buf.write(f"# config_sha256: {self.config.digest()}\n")
        for key, value in sorted(self.config.to_dict().items()):
            buf.write(f"# {key}: {json.dumps(value, sort_keys=True)}\n")
        buf.write(",".join(self.columns) + "\n")
        for row in self.rows:
            buf.write(",".join(_fmt(v) for v in row) + "\n")
        return buf.getvalue()

    def write(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv(), encoding="utf-8")
        return path

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]


def run_table1(config: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Critical values of the COT test for von Mises nulls.

    Every concentration reuses the same Gaussian streams, so differences
    across columns are not blurred by independent Monte Carlo noise.
    """
    rows = []
    for kappa in config.grids["kappa"]:
        null = Uniform() if kappa == 0 else VonMises(0.5, kappa)
        cal = calibrate(null, D=config.D, N=config.N, seed=config.seed, threads=threads)
        for alpha in config.alphas:
            rows.append((float(kappa), float(alpha), cal.critical_value(alpha)))
    return ExperimentResult(config, ("kappa", "alpha", "quantile"), rows)


def _scaled_cot_uniform(n: int, reps: int, D: int, seed: int, key: int) -> np.ndarray:
    grid = discretize_distribution(Uniform(), D).values
    rows = max(1, 4_000_000 // max(n, D))
    out = []
    for j, (a, b) in enumerate(blocks(reps, rows)):
        X = stream(seed, 1, key, j).random((b - a, n))
        out.append(math.sqrt(n) * cot_grid_batch(discretize_samples(X, D), grid))
    return np.concatenate(out)


def run_clt_convergence(config: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """KS distance to the limit law, empirical and m-out-of-n bootstrap arms.

    For each ``n``: ``reps`` uniform samples give the law of
    ``sqrt(n) COT(mu_n, Unif)``; one further sample is bootstrapped with
    ``m = ceil(n^m_exponent)`` and ``reps`` replicates. Both are compared
    with one shared limit sample of size ``N``.
    """
    limit = mc_limit_sample(Uniform(), D=config.D, N=config.N, seed=config.seed, threads=threads)
    rows = []
    for i, n in enumerate(config.grids["n"]):
        n = int(n)
        emp = _scaled_cot_uniform(n, config.reps, config.D, config.seed, i)
        sample = stream(config.seed, 2, i).random(n)
        m = math.ceil(n**config.m_exponent)
        spec = BootstrapSpec("m_of_n", m=m, B=config.reps, seed=derive_seed(config.seed, 3, i))
        boot = bootstrap_distribution(sample, spec, threads=threads)
        rows.append((n, m, ks_distance(emp, limit), ks_distance(boot, limit)))
    return ExperimentResult(config, ("n", "m", "ks_empirical", "ks_bootstrap"), rows)


def run_power_figures(config: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Rejection rates for the three alternative designs.

    ``vonmises``: mean 0.5, varying kappa. ``stephens_bimodal``: M = 2,
    varying L. ``stephens_modes``: L = 2, varying M, for each ``n_modes``.
    Within a design all tests see the same samples.
    """
    g = config.grids
    designs = [("vonmises", n, lambda k: VonMises(0.5, k), g["kappa"]) for n in g["n"]]
    designs += [("stephens_bimodal", n, lambda L: Stephens(2, L), g["L"]) for n in g["n"]]
    designs += [("stephens_modes", n, lambda M: Stephens(int(M), 2.0), g["M"]) for n in g["n_modes"]]
    rows = []
    for d, (name, n, family, params) in enumerate(designs):
        seed = derive_seed(config.seed, 4, d)
        for test in g["tests"]:
            curve = power_curve(
                test, family, params, int(n), config.reps, config.alpha, seed, config.D, config.N, threads=threads
            )
            rows += [(name, test, int(n), p, rate) for p, rate in curve]
        for test in g.get("external_tests", []):
            rows += [(name, test, int(n), float(p), float("nan")) for p in params]
    return ExperimentResult(config, ("design", "test", "n", "param", "power"), rows)


def run_cot_curves(config: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """COT distance from the uniform law along von Mises and Stephens families."""
    D = config.D
    unif = discretize_distribution(Uniform(), D)
    rows = []
    for kappa in config.grids["kappa"]:
        rows.append(("vonmises", float(kappa), cot_grid(unif, discretize_distribution(VonMises(0.5, kappa), D))))
    for M in config.grids["M"]:
        for L in config.grids["L"]:
            rows.append((f"stephens_M{int(M)}", float(L), cot_grid(unif, discretize_distribution(Stephens(int(M), L), D))))
    return ExperimentResult(config, ("family", "param", "cot"), rows)


EXPERIMENTS = {
    "table1": run_table1,
    "clt": run_clt_convergence,
    "power": run_power_figures,
    "cot_curves": run_cot_curves,
}


def run_experiment(config: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    return EXPERIMENTS[config.experiment](config, threads=threads)
