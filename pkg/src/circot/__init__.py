"""Circular optimal transport: distances, limit laws, and goodness-of-fit tests."""

from .core import (
    DiscreteCircularMeasure,
    GridCDF,
    StepFunction,
    cdf_of,
    cot_exact,
    cot_exact_samples,
    cot_grid,
    discretize_distribution,
    discretize_measure,
    geodesic_distance,
    level_median,
    wrap,
)
from .distributions import (
    Cardioid,
    CircularDistribution,
    Stephens,
    Uniform,
    VonMises,
    WrappedCauchy,
    parse_distribution,
)

from .inference import (
    BootstrapSpec,
    TestResult,
    bootstrap_distribution,
    calibrate,
    cott_one_sample,
    cott_two_sample,
    power_curve,
)
from .limitlaw import AssumptionError, find_intersections, mc_limit_sample, mc_quantile, sigma_closed_form

__version__ = "0.1.0"

__all__ = [
    "AssumptionError",
    "BootstrapSpec",
    "Cardioid",
    "CircularDistribution",
    "DiscreteCircularMeasure",
    "GridCDF",
    "StepFunction",
    "Stephens",
    "TestResult",
    "Uniform",
    "VonMises",
    "WrappedCauchy",
    "bootstrap_distribution",
    "calibrate",
    "cdf_of",
    "cot_exact",
    "cot_exact_samples",
    "cot_grid",
    "cott_one_sample",
    "cott_two_sample",
    "discretize_distribution",
    "discretize_measure",
    "find_intersections",
    "geodesic_distance",
    "level_median",
    "mc_limit_sample",
    "mc_quantile",
    "parse_distribution",
    "power_curve",
    "sigma_closed_form",
    "wrap",
]
