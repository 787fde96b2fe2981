"""Coefficient functions for the linear two-row view of noise schedules.

Every family supported here writes its forward corruption and its prediction
target as a single time-varying linear system in the (data, noise) pair::

    x_t     = a11(t) * z + a12(t) * eps        # noisy state
    omega_t = a21(t) * z + a22(t) * eps        # network target

with ``z`` scaled to unit variance and ``eps`` standard Gaussian.  Built-in
families:

- ``ddpm_noise_pred``: forward row (alpha_t, sigma_t), target row (0, 1);
  the network predicts the noise.
- ``ddpm_data_pred``: same forward row, target row (1, 0); the network
  predicts the data.
- ``edm_common``: alpha_t = sigma_d / sqrt(sigma_d^2 + t^2); the target is
  the preconditioned residual, equivalent to sigma_t * z - alpha_t * eps.
- ``trig_flow``: cos/sin rows on [0, pi/2]; the target is the velocity
  d(x_t)/dt, so a21 = a11' and a22 = a12'.
- ``trig_flow_unit``: trig_flow rescaled to [0, 1].  Its target keeps unit
  norm, i.e. it equals (2/pi) * d(x_t)/dt, so the raw derivative identity
  holds only up to that factor.
- ``rectified_flow``: linear rows (1-t, t) on [0, 1]; target eps - z.  The
  only family here that is not variance preserving.

All evaluations are scalar double precision and pure.  The determinant
vanishes at one endpoint for the two DDPM targets; quantities that divide by
it are the callers' concern, which is why grid evaluations use the clamped
domain ``[t0 + clamp_eps, tf - clamp_eps]``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import NotFlowMatching, OutOfDomain

#: Determinant magnitudes below this are treated as structurally rank-deficient.
SINGULAR_DET_TOL = 1e-12


class Family(enum.Enum):
    """Supported schedule families."""

    DDPM_NOISE_PRED = "ddpm_noise_pred"
    DDPM_DATA_PRED = "ddpm_data_pred"
    EDM_COMMON = "edm_common"
    TRIG_FLOW = "trig_flow"
    TRIG_FLOW_UNIT = "trig_flow_unit"
    RECTIFIED_FLOW = "rectified_flow"


#: The five distinct families; the unit-interval trig flow is a rescaling.
TABLE_FAMILIES = (
    Family.DDPM_NOISE_PRED,
    Family.DDPM_DATA_PRED,
    Family.EDM_COMMON,
    Family.TRIG_FLOW,
    Family.RECTIFIED_FLOW,
)

DDPM_FAMILIES = frozenset({Family.DDPM_NOISE_PRED, Family.DDPM_DATA_PRED})

#: Families whose target is a velocity-style combination of data and noise.
FLOW_MATCHING_FAMILIES = frozenset(
    {Family.TRIG_FLOW, Family.TRIG_FLOW_UNIT, Family.RECTIFIED_FLOW}
)

#: Flow-matching families whose target is exactly d(x_t)/dt.  The
#: unit-interval trig flow rescales its target by 2/pi and is excluded.
EXACT_VELOCITY_FAMILIES = frozenset({Family.TRIG_FLOW, Family.RECTIFIED_FLOW})

#: Families with a11^2 + a12^2 = 1 (unit-variance state for unit-variance data).
VARIANCE_PRESERVING_FAMILIES = frozenset(
    {
        Family.DDPM_NOISE_PRED,
        Family.DDPM_DATA_PRED,
        Family.EDM_COMMON,
        Family.TRIG_FLOW,
        Family.TRIG_FLOW_UNIT,
    }
)


@dataclass(frozen=True)
class TimeDomain:
    """Closed time interval of a forward process, with an exclusion margin.

    ``clamp_eps`` is the margin grid evaluations keep from the endpoints,
    where several derived quantities (log-SNR, one of the determinants) are
    singular.
    """

    t0: float
    tf: float
    clamp_eps: float = 1e-6

    def __post_init__(self) -> None:
        if not self.t0 < self.tf:
            raise ValueError(f"t0 must be < tf, got [{self.t0}, {self.tf}]")
        if self.clamp_eps <= 0:
            raise ValueError(f"clamp_eps must be positive, got {self.clamp_eps}")
        if not self.t0 + self.clamp_eps < self.tf - self.clamp_eps:
            raise ValueError("clamp_eps leaves no interior interval")

    @property
    def clamped(self) -> tuple[float, float]:
        """Endpoints of the clamped (interior) interval."""
        return self.t0 + self.clamp_eps, self.tf - self.clamp_eps

    def contains(self, t: float) -> bool:
        return self.t0 <= t <= self.tf


@dataclass(frozen=True)
class _AlphaCurve:
    """A differentiable variance-preserving alpha/sigma pair on [0, 1]."""

    alpha: Callable[[float], float]
    sigma: Callable[[float], float]
    alpha_dot: Callable[[float], float]
    sigma_dot: Callable[[float], float]


# Smooth VP default for the DDPM families; discrete beta sequences are out of scope.
_ALPHA_CURVES: dict[str, _AlphaCurve] = {
    "cosine": _AlphaCurve(
        alpha=lambda t: math.cos(0.5 * math.pi * t),
        sigma=lambda t: math.sin(0.5 * math.pi * t),
        alpha_dot=lambda t: -0.5 * math.pi * math.sin(0.5 * math.pi * t),
        sigma_dot=lambda t: 0.5 * math.pi * math.cos(0.5 * math.pi * t),
    ),
}

# Domains outside which each family's coefficient rows lose monotonicity.
_MAX_DOMAINS: dict[Family, tuple[float, float]] = {
    Family.DDPM_NOISE_PRED: (0.0, 1.0),
    Family.DDPM_DATA_PRED: (0.0, 1.0),
    Family.EDM_COMMON: (0.0, math.inf),
    Family.TRIG_FLOW: (0.0, 0.5 * math.pi),
    Family.TRIG_FLOW_UNIT: (0.0, 1.0),
    Family.RECTIFIED_FLOW: (0.0, 1.0),
}

_DEFAULT_DOMAINS: dict[Family, tuple[float, float]] = {
    Family.DDPM_NOISE_PRED: (0.0, 1.0),
    Family.DDPM_DATA_PRED: (0.0, 1.0),
    Family.EDM_COMMON: (0.0, 80.0),
    Family.TRIG_FLOW: (0.0, 0.5 * math.pi),
    Family.TRIG_FLOW_UNIT: (0.0, 1.0),
    Family.RECTIFIED_FLOW: (0.0, 1.0),
}


@dataclass(frozen=True)
class Schedule:
    """One family with its parameters and time domain."""

    family: Family
    domain: TimeDomain
    sigma_d: float = 0.5  # data scale of the edm_common family
    alpha_fn: str = "cosine"  # alpha curve of the two DDPM families

    def __post_init__(self) -> None:
        if self.family is Family.EDM_COMMON and self.sigma_d <= 0:
            raise ValueError(f"sigma_d must be positive, got {self.sigma_d}")
        if self.family in DDPM_FAMILIES and self.alpha_fn not in _ALPHA_CURVES:
            known = ", ".join(sorted(_ALPHA_CURVES))
            raise ValueError(f"unknown alpha_fn {self.alpha_fn!r}; known: {known}")
        lo, hi = _MAX_DOMAINS[self.family]
        if self.domain.t0 < lo or self.domain.tf > hi:
            raise ValueError(
                f"{self.family.value} requires a domain inside [{lo}, {hi}], "
                f"got [{self.domain.t0}, {self.domain.tf}]"
            )


def make_schedule(
    family: Family | str,
    *,
    sigma_d: float = 0.5,
    t0: float | None = None,
    tf: float | None = None,
    clamp_eps: float = 1e-6,
    alpha_fn: str = "cosine",
) -> Schedule:
    """Build a schedule, using the family's customary domain unless overridden."""
    if isinstance(family, str):
        family = Family(family)
    d0, df = _DEFAULT_DOMAINS[family]
    domain = TimeDomain(
        t0=d0 if t0 is None else float(t0),
        tf=df if tf is None else float(tf),
        clamp_eps=clamp_eps,
    )
    return Schedule(family=family, domain=domain, sigma_d=sigma_d, alpha_fn=alpha_fn)


@dataclass(frozen=True)
class CoeffMatrix:
    """The four coefficients at one time, with their determinant."""

    t: float
    a11: float
    a12: float
    a21: float
    a22: float
    det: float


def _ddpm_rows(schedule: Schedule, t: float) -> tuple[float, float, float, float]:
    curve = _ALPHA_CURVES[schedule.alpha_fn]
    a, s = curve.alpha(t), curve.sigma(t)
    if schedule.family is Family.DDPM_NOISE_PRED:
        return a, s, 0.0, 1.0
    return a, s, 1.0, 0.0


def _edm_rows(schedule: Schedule, t: float) -> tuple[float, float, float, float]:
    norm = math.hypot(schedule.sigma_d, t)
    a11 = schedule.sigma_d / norm
    a12 = t / norm
    return a11, a12, a12, -a11


def _trig_rows(schedule: Schedule, t: float) -> tuple[float, float, float, float]:
    return math.cos(t), math.sin(t), -math.sin(t), math.cos(t)


def _trig_unit_rows(schedule: Schedule, t: float) -> tuple[float, float, float, float]:
    u = 0.5 * math.pi * t
    return math.cos(u), math.sin(u), -math.sin(u), math.cos(u)


def _rf_rows(schedule: Schedule, t: float) -> tuple[float, float, float, float]:
    return 1.0 - t, t, -1.0, 1.0


_COEFFICIENT_FNS: dict[Family, Callable[[Schedule, float], tuple[float, float, float, float]]] = {
    Family.DDPM_NOISE_PRED: _ddpm_rows,
    Family.DDPM_DATA_PRED: _ddpm_rows,
    Family.EDM_COMMON: _edm_rows,
    Family.TRIG_FLOW: _trig_rows,
    Family.TRIG_FLOW_UNIT: _trig_unit_rows,
    Family.RECTIFIED_FLOW: _rf_rows,
}


def coefficients(schedule: Schedule, t: float) -> CoeffMatrix:
    """Evaluate the four coefficients and their determinant at time ``t``.

    Pure and deterministic.  Exact endpoints are allowed; only derived
    quantities become singular there.

    Raises:
        OutOfDomain: if ``t`` is outside the schedule's closed domain.
    """
    t = float(t)
    if not schedule.domain.contains(t):
        raise OutOfDomain(
            f"t={t} outside [{schedule.domain.t0}, {schedule.domain.tf}] "
            f"for {schedule.family.value}"
        )
    a11, a12, a21, a22 = _COEFFICIENT_FNS[schedule.family](schedule, t)
    return CoeffMatrix(t=t, a11=a11, a12=a12, a21=a21, a22=a22, det=a11 * a22 - a12 * a21)


def derivatives(schedule: Schedule, t: float) -> tuple[float, float]:
    """Analytic time derivatives of (a11, a12) at ``t``."""
    t = float(t)
    if not schedule.domain.contains(t):
        raise OutOfDomain(
            f"t={t} outside [{schedule.domain.t0}, {schedule.domain.tf}] "
            f"for {schedule.family.value}"
        )
    family = schedule.family
    if family in DDPM_FAMILIES:
        curve = _ALPHA_CURVES[schedule.alpha_fn]
        return curve.alpha_dot(t), curve.sigma_dot(t)
    if family is Family.EDM_COMMON:
        scale = (schedule.sigma_d**2 + t * t) ** -1.5
        return -schedule.sigma_d * t * scale, schedule.sigma_d**2 * scale
    if family is Family.TRIG_FLOW:
        return -math.sin(t), math.cos(t)
    if family is Family.TRIG_FLOW_UNIT:
        u = 0.5 * math.pi * t
        return -0.5 * math.pi * math.sin(u), 0.5 * math.pi * math.cos(u)
    return -1.0, 1.0


def clamped_grid(schedule: Schedule, n_points: int) -> np.ndarray:
    """Uniform grid over the clamped domain."""
    if n_points < 1:
        raise ValueError(f"n_points must be >= 1, got {n_points}")
    lo, hi = schedule.domain.clamped
    return np.linspace(lo, hi, n_points)


@dataclass(frozen=True)
class LimitReport:
    """Endpoint residuals of the coefficient rows."""

    residuals: dict[str, float]
    tol: float

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values())

    @property
    def passed(self) -> bool:
        return self.max_residual < self.tol


def check_limits(schedule: Schedule, tol: float) -> LimitReport:
    """Check a11 -> 1, a12 -> 0 at the start and a11 -> 0, a12 -> 1 at the end.

    Residuals are evaluated at the exact endpoints, where the coefficient
    rows themselves are finite for every family.  Families that reach the
    limits only asymptotically (edm_common truncated at a finite final time)
    need a correspondingly loose tolerance.
    """
    start = coefficients(schedule, schedule.domain.t0)
    end = coefficients(schedule, schedule.domain.tf)
    residuals = {
        "a11_at_start": abs(start.a11 - 1.0),
        "a12_at_start": abs(start.a12),
        "a11_at_end": abs(end.a11),
        "a12_at_end": abs(end.a12 - 1.0),
    }
    return LimitReport(residuals=residuals, tol=tol)


@dataclass(frozen=True)
class DerivativeReport:
    """Finite-difference residuals of a11' = a21 and a12' = a22."""

    max_error_a21: float
    max_error_a22: float
    h: float
    tol: float

    @property
    def max_error(self) -> float:
        return max(self.max_error_a21, self.max_error_a22)

    @property
    def passed(self) -> bool:
        return self.max_error < self.tol


def check_derivative_relation(
    schedule: Schedule, h: float = 1e-5, tol: float = 1e-8, n_points: int = 101
) -> DerivativeReport:
    """Compare central differences of (a11, a12) against (a21, a22) on a grid.

    Only meaningful for the flow-matching families.  For ``trig_flow_unit``
    the report shows the 2/pi target rescaling rather than a pass; the
    identity is exact for ``trig_flow`` and ``rectified_flow``.

    Raises:
        NotFlowMatching: for families whose target is not velocity-style.
    """
    if schedule.family not in FLOW_MATCHING_FAMILIES:
        raise NotFlowMatching(
            f"{schedule.family.value} has no velocity-style target"
        )
    if h <= 0:
        raise ValueError(f"step h must be positive, got {h}")
    lo, hi = schedule.domain.clamped
    err21 = err22 = 0.0
    for t in np.linspace(lo + h, hi - h, n_points):
        plus = coefficients(schedule, t + h)
        minus = coefficients(schedule, t - h)
        mid = coefficients(schedule, t)
        err21 = max(err21, abs((plus.a11 - minus.a11) / (2.0 * h) - mid.a21))
        err22 = max(err22, abs((plus.a12 - minus.a12) / (2.0 * h) - mid.a22))
    return DerivativeReport(max_error_a21=err21, max_error_a22=err22, h=h, tol=tol)


class EdmPreconditioner(NamedTuple):
    """Input/output/skip scalings of the preconditioned denoiser."""

    c_in: float
    c_out: float
    c_skip: float
    c_noise: float


def edm_preconditioners(sigma_d: float, t: float) -> EdmPreconditioner:
    """Preconditioner scalings at noise level ``t``.

    The derived forward row is (sigma_d * c_in, t * c_in), which matches the
    ``edm_common`` coefficients.  ``c_noise`` is the raw time; it never
    enters numeric results here and is carried for completeness.
    """
    if sigma_d <= 0:
        raise ValueError(f"sigma_d must be positive, got {sigma_d}")
    norm_sq = sigma_d * sigma_d + t * t
    norm = math.sqrt(norm_sq)
    return EdmPreconditioner(
        c_in=1.0 / norm,
        c_out=sigma_d * t / norm,
        c_skip=sigma_d * sigma_d / norm_sq,
        c_noise=t,
    )
