"""Error exponents and Monte Carlo simulation of bin-index decoding over DMCs."""

from .flat import (
    ExponentResult,
    FlatEnsembleSpec,
    bin_score_exponent,
    ml_bin_exponent,
    optimal_bin_exponent,
    random_coding_exponent,
    typical_bin_score,
)
from .probability import (
    binary_symmetric_channel,
    cond,
    conditional_mutual_information,
    dist,
    empirical_joint,
    joint,
    log_likelihood_rate,
    mutual_information,
    uniform,
    weighted_divergence,
)

__all__ = [
    "ExponentResult",
    "FlatEnsembleSpec",
    "bin_score_exponent",
    "binary_symmetric_channel",
    "cond",
    "conditional_mutual_information",
    "dist",
    "empirical_joint",
    "joint",
    "log_likelihood_rate",
    "ml_bin_exponent",
    "mutual_information",
    "optimal_bin_exponent",
    "random_coding_exponent",
    "typical_bin_score",
    "uniform",
    "weighted_divergence",
]
