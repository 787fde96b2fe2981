"""Coefficient-matrix analysis of diffusion and flow-matching noise schedules.

The library views each model family as a time-varying 2x2 linear system
mapping the (data, noise) pair to the (noisy state, prediction target) pair,
and provides exact analytic diagnostics (determinant, state/target Pearson
correlation, error-amplification factors, log-SNR), exact inversion-based
reverse processes, and Monte Carlo verification of every claim.
"""

from .analysis import (
    AnalysisRow,
    amplification,
    amplification_to_zero,
    pearson,
    snr,
    table_row,
)
from .conversions import (
    Observation,
    StatePair,
    consistency,
    invert,
    noise_pred,
    velocity_field,
)
from .dynamics import (
    OraclePredictor,
    Trajectory,
    VarianceMode,
    ddpm_stochastic_step,
    forward,
    measure_amplification,
    reverse_step,
    reverse_trajectory,
)
from .empirical import (
    CurvePoint,
    DataDistribution,
    DistributionKind,
    McEstimate,
    correlation_curve,
    estimate_pearson,
    estimate_variance,
    standard_normal,
    two_mode_mixture,
)
from .errors import (
    ConfigError,
    DegenerateTarget,
    FlowMatrixError,
    NotDdpm,
    NotFlowMatching,
    OutOfDomain,
    SingularParameterization,
    TimeOrder,
)
from .schedules import (
    DDPM_FAMILIES,
    EXACT_VELOCITY_FAMILIES,
    FLOW_MATCHING_FAMILIES,
    TABLE_FAMILIES,
    VARIANCE_PRESERVING_FAMILIES,
    CoeffMatrix,
    DerivativeReport,
    EdmPreconditioner,
    Family,
    LimitReport,
    Schedule,
    TimeDomain,
    check_derivative_relation,
    check_limits,
    clamped_grid,
    coefficients,
    derivatives,
    edm_preconditioners,
    make_schedule,
)

__version__ = "0.1.0"

__all__ = [
    "AnalysisRow",
    "CoeffMatrix",
    "ConfigError",
    "CurvePoint",
    "DataDistribution",
    "DDPM_FAMILIES",
    "DegenerateTarget",
    "DerivativeReport",
    "DistributionKind",
    "EdmPreconditioner",
    "EXACT_VELOCITY_FAMILIES",
    "Family",
    "FLOW_MATCHING_FAMILIES",
    "FlowMatrixError",
    "LimitReport",
    "McEstimate",
    "NotDdpm",
    "NotFlowMatching",
    "Observation",
    "OraclePredictor",
    "OutOfDomain",
    "Schedule",
    "SingularParameterization",
    "StatePair",
    "TABLE_FAMILIES",
    "TimeDomain",
    "TimeOrder",
    "Trajectory",
    "VARIANCE_PRESERVING_FAMILIES",
    "VarianceMode",
    "amplification",
    "amplification_to_zero",
    "check_derivative_relation",
    "check_limits",
    "clamped_grid",
    "coefficients",
    "consistency",
    "correlation_curve",
    "ddpm_stochastic_step",
    "derivatives",
    "edm_preconditioners",
    "estimate_pearson",
    "estimate_variance",
    "forward",
    "invert",
    "make_schedule",
    "measure_amplification",
    "noise_pred",
    "pearson",
    "reverse_step",
    "reverse_trajectory",
    "snr",
    "standard_normal",
    "table_row",
    "two_mode_mixture",
    "velocity_field",
]
