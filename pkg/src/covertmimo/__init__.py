"""Covert-link analysis for MIMO AWGN channels.

Channel synthesis from uniform-linear-array geometry, divergence-based
covertness metrics, constrained power allocation, square-root-law scaling
constants, and an energy-detector simulator with an exact oracle.
"""

from .allocation import (
    AllocationResult,
    NormalizedShares,
    NullSteering,
    closed_form_allocation,
    normalized_shares,
    null_steer_index,
    optimize_covariance,
    steer_direction,
    uniform_shares,
)
from .channel import (
    ArrayGeometry,
    EigenStructure,
    LosPath,
    MimoScenario,
    SpectralBound,
    angular_basis,
    angular_representation,
    beam_gain,
    geometry_from_json,
    los_channel,
    multipath_channel,
    rotated_eigen,
    scenario_from_json,
    scenario_to_json,
    unit_signature,
)
from .covertness import (
    CovertBudget,
    PowerAllocation,
    covert_power_limit,
    detection_lower_bound,
    invert_kl_term,
    kl_from_covariance,
    kl_n_letter,
    kl_single_letter,
    kl_term,
    lambert_w_minus1,
    min_antennas,
)
from .detector import (
    DetectionOutcome,
    empirical_kl,
    exact_error_sum,
    exact_error_sum_for,
    monte_carlo_detection,
)
from .errors import (
    AlignmentError,
    CovertMimoError,
    InconsistentSharesError,
    InsufficientTrialsError,
    InvalidInputError,
    NoNullDirectionError,
    NumericalConsistencyError,
    RegimeError,
    UndefinedSharesError,
    UnsupportedCaseError,
)
from .scaling import (
    ScalingResult,
    covert_nats_firstorder,
    covert_rate,
    covert_scaling,
    covert_scaling_bounds,
    dbm_per_hz_to_watts,
    dbm_to_watts,
    finite_n_normalized_rate,
    secrecy_covert_scaling,
    secrecy_rate,
    unit_rank_scaling,
)

__version__ = "0.1.0"
