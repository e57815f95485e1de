"""assoclab: simulation laboratory for limit theorems of associated moving averages.

Exact covariance algebra for nonnegative-weight moving averages, block and
coupling-block simulation with a deterministic parallel Monte Carlo engine,
characteristic-function diagnostics, closed-form convergence-rate algebra,
and end-to-end verification experiments.
"""

from .charfn import (
    CFEstimate,
    SmoothingParameters,
    block_covariance,
    block_covariance_identity,
    cf_product_deviation,
    empirical_cf,
    esseen_distance_bound,
    newman_check,
    truncation_frequency,
)
from .empirics import (
    FrolovDiagnostics,
    RateExperimentResult,
    clt_rate_experiment,
    coupling_distance,
    frolov_diagnostics,
    frolov_experiment,
    ks_distance,
    moddev_ratio,
    remainder_tail,
    two_sample_ks,
)
from .models import (
    EXACT,
    CovarianceProfile,
    InnovationLaw,
    MAModel,
    autocovariance,
    autocovariances,
    covariance_profile,
    cox_grimmett,
    decay_exponents,
    geometric_weights,
    long_run_variance,
    partial_sum_variance,
    power_weights,
)
from .rates import (
    ModDevWindows,
    RateBound,
    clt_rate_exponent,
    component_exponents,
    frolov_block_threshold,
    moddev_windows,
    mu_generalized_rate,
    optimal_alpha,
)
from .simulate import (
    BlockScheme,
    BlockSums,
    MCConfig,
    MonteCarloEstimate,
    block_sums,
    coupling_block_sums,
    make_block_scheme,
    mc_run,
    sample_path,
)

__all__ = [
    "EXACT",
    "CovarianceProfile",
    "InnovationLaw",
    "MAModel",
    "autocovariance",
    "autocovariances",
    "covariance_profile",
    "cox_grimmett",
    "decay_exponents",
    "geometric_weights",
    "long_run_variance",
    "partial_sum_variance",
    "power_weights",
    "ModDevWindows",
    "RateBound",
    "clt_rate_exponent",
    "component_exponents",
    "frolov_block_threshold",
    "moddev_windows",
    "mu_generalized_rate",
    "optimal_alpha",
    "BlockScheme",
    "BlockSums",
    "MCConfig",
    "MonteCarloEstimate",
    "block_sums",
    "coupling_block_sums",
    "make_block_scheme",
    "mc_run",
    "sample_path",
    "CFEstimate",
    "SmoothingParameters",
    "block_covariance",
    "block_covariance_identity",
    "cf_product_deviation",
    "empirical_cf",
    "esseen_distance_bound",
    "newman_check",
    "truncation_frequency",
    "FrolovDiagnostics",
    "RateExperimentResult",
    "clt_rate_experiment",
    "coupling_distance",
    "frolov_diagnostics",
    "frolov_experiment",
    "ks_distance",
    "moddev_ratio",
    "remainder_tail",
    "two_sample_ks",
]

__version__ = "0.1.0"
