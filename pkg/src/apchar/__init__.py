"""apchar: generalized Muckenhoupt characteristics of grid weights.

Computes [w]_{p1,p2} = sup_J <w^p1>_J^(1/p1) <w^p2>_J^(-1/p2) over grid-
aligned boxes of a discretized cube, applies cut-off/truncation/
regularisation operators, and verifies at machine precision that cutting a
weight never increases its characteristic, along with the identities and
derivative-sign facts underlying that monotonicity.
"""

from .errors import (
    ApCharError,
    CubeOutOfRange,
    InvalidExponent,
    InvalidParameter,
    InvalidWeight,
    PolicyError,
)
from .weights import (
    Exponent,
    ExponentPair,
    GridCube,
    GridWeight,
    PartitionStats,
    ap_ratio,
    bm_regularize,
    cutoff_above,
    cutoff_below,
    partition_stats,
    power_mean,
    reciprocal,
    reciprocal_dual,
    truncate_two_sided,
)
from .characteristic import (
    POLICIES,
    CharacteristicResult,
    MeanCache,
    a2_norm,
    ap_norm,
    build_cache,
    cube_arrays,
    cube_ratios,
    default_policy,
    enumerate_cubes,
)
from .verification import (
    A2Decomposition,
    PhiParams,
    VerificationReport,
    a2_decomposition_residual,
    a2_identity_suite,
    below_cut_suite,
    bm_profile,
    bm_report,
    check_below_cut,
    check_cutoff_monotonicity,
    convergence_profile,
    convergence_report,
    exponent_pair_grid,
    phi_eval,
    phi_from_cutoff,
    phi_partials,
    phi_suite,
    random_lognormal_weight,
    theorem1_suite,
)
from .io import read_weight, weight_from_dict, weight_to_dict, write_weight

__version__ = "0.1.0"

__all__ = [
    "ApCharError",
    "CubeOutOfRange",
    "InvalidExponent",
    "InvalidParameter",
    "InvalidWeight",
    "PolicyError",
    "Exponent",
    "ExponentPair",
    "GridCube",
    "GridWeight",
    "PartitionStats",
    "ap_ratio",
    "bm_regularize",
    "cutoff_above",
    "cutoff_below",
    "partition_stats",
    "power_mean",
    "reciprocal",
    "reciprocal_dual",
    "truncate_two_sided",
    "POLICIES",
    "CharacteristicResult",
    "MeanCache",
    "a2_norm",
    "ap_norm",
    "build_cache",
    "cube_arrays",
    "cube_ratios",
    "default_policy",
    "enumerate_cubes",
    "A2Decomposition",
    "PhiParams",
    "VerificationReport",
    "a2_decomposition_residual",
    "a2_identity_suite",
    "below_cut_suite",
    "bm_profile",
    "bm_report",
    "check_below_cut",
    "check_cutoff_monotonicity",
    "convergence_profile",
    "convergence_report",
    "exponent_pair_grid",
    "phi_eval",
    "phi_from_cutoff",
    "phi_partials",
    "phi_suite",
    "random_lognormal_weight",
    "theorem1_suite",
    "read_weight",
    "weight_from_dict",
    "weight_to_dict",
    "write_weight",
    "__version__",
]
