"""Analytic diagnostics of a schedule: correlation, amplification, log-SNR.

For the linear system ``x_t = a11 z + a12 eps``, ``omega = a21 z + a22 eps``
with independent unit-variance ``z`` and ``eps``, three quantities describe
how hard the prediction problem is and how target errors travel through the
reverse process:

- the Pearson correlation between the noisy state and the target::

      psi(t) = (a11 a21 + a12 a22) / (hypot(a11, a12) * hypot(a21, a22))

- the factor by which a target error at time ``t`` shows up in the state
  reconstructed at an earlier time ``t'``::

      phi(t, t') = (a11(t) a12(t') - a11(t') a12(t)) / det(t)

- the log signal-to-noise ratio ``lambda(t) = log(a11^2 / a12^2)`` and its
  derivative ``lambda'(t) = 2 (a11'/a11 - a12'/a12)``.

``psi`` is built from covariances only, so it is identical for any
unit-variance data distribution, Gaussian or not.  Notable closed forms: the
residual-target family (edm_common) and both trig flows have ``psi == 0``
everywhere, and the three non-DDPM targets keep ``|det| == 1``, which is what
bounds their error amplification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from .errors import DegenerateTarget, FlowMatrixError, SingularParameterization
from .schedules import SINGULAR_DET_TOL, CoeffMatrix, Schedule, coefficients, derivatives


def pearson(schedule: Schedule, t: float) -> float:
    """Correlation between the noisy state and the prediction target at ``t``.

    Raises:
        OutOfDomain: if ``t`` is outside the domain.
        DegenerateTarget: if both target coefficients vanish.
    """
    c = coefficients(schedule, t)
    target_norm = math.hypot(c.a21, c.a22)
    if target_norm == 0.0:
        raise DegenerateTarget(f"target row vanishes at t={t}")
    state_norm = math.hypot(c.a11, c.a12)
    return (c.a11 * c.a21 + c.a12 * c.a22) / (state_norm * target_norm)


def _nonsingular(schedule: Schedule, t: float) -> CoeffMatrix:
    c = coefficients(schedule, t)
    if abs(c.det) < SINGULAR_DET_TOL:
        raise SingularParameterization(
            f"coefficient matrix is singular at t={t} (det={c.det:.3e})"
        )
    return c


def amplification(schedule: Schedule, t: float, t_prime: float) -> float:
    """Signed error-amplification factor from time ``t`` down to ``t_prime``.

    The numerator is antisymmetric in (t, t'), so coincident times give 0;
    the magnitude is what matters for error growth.

    Raises:
        SingularParameterization: if the matrix is singular at ``t``.
    """
    ct = _nonsingular(schedule, t)
    cp = coefficients(schedule, t_prime)
    return (ct.a11 * cp.a12 - cp.a11 * ct.a12) / ct.det


def amplification_to_zero(schedule: Schedule, t: float) -> float:
    """``|phi(t, t0)|``: amplification of a one-jump-to-data reconstruction.

    Cross-checked against the two-time formula evaluated at the domain
    start; the two agree exactly because a11(t0) = 1 and a12(t0) = 0 for
    every built-in family on its natural domain.
    """
    c = _nonsingular(schedule, t)
    value = abs(c.a12 / c.det)
    cross = abs(amplification(schedule, t, schedule.domain.t0))
    if abs(value - cross) > 1e-12:
        raise FlowMatrixError(
            "one-jump amplification identity violated; the domain start must "
            f"satisfy a11=1, a12=0 (got t0={schedule.domain.t0})"
        )
    return value


def snr(schedule: Schedule, t: float) -> tuple[float, float]:
    """Log-SNR ``lambda(t)`` and its analytic derivative.

    Raises:
        SingularParameterization: where a11 or a12 is not positive (the
            endpoints), so the log-SNR or its rate is undefined.
    """
    c = coefficients(schedule, t)
    if c.a11 <= 0.0 or c.a12 <= 0.0:
        raise SingularParameterization(
            f"log-SNR undefined at t={t}: a11={c.a11:.3e}, a12={c.a12:.3e}"
        )
    da11, da12 = derivatives(schedule, t)
    lam = math.log(c.a11 * c.a11 / (c.a12 * c.a12))
    lam_dot = 2.0 * (da11 / c.a11 - da12 / c.a12)
    return lam, lam_dot


@dataclass(frozen=True)
class AnalysisRow:
    """Per-time record of the diagnostics, suitable for CSV emission.

    ``error`` marks rows where a quantity was singular or undefined; the
    affected fields carry inf/nan so tables stay rectangular.
    """

    t: float
    det: float
    psi: float
    log_snr: float
    log_snr_rate: float
    phi_to_ref: float
    error: str | None = None


def table_row(schedule: Schedule, t_grid: Iterable[float], t_ref: float) -> list[AnalysisRow]:
    """Evaluate all diagnostics on a grid against a reference time.

    Per-point failures become row markers instead of exceptions.  An exactly
    singular determinant reports the amplification as the ``+inf`` sentinel
    rather than raising.
    """
    rows: list[AnalysisRow] = []
    for t in t_grid:
        t = float(t)
        error: str | None = None
        c = coefficients(schedule, t)
        try:
            psi = pearson(schedule, t)
        except DegenerateTarget as exc:
            psi = math.nan
            error = str(exc)
        try:
            lam, lam_dot = snr(schedule, t)
        except SingularParameterization as exc:
            lam = math.inf if c.a12 <= 0.0 else -math.inf
            lam_dot = -math.inf
            error = error or str(exc)
        if abs(c.det) < SINGULAR_DET_TOL:
            phi = math.inf  # singular-endpoint sentinel
        else:
            phi = abs(amplification(schedule, t, t_ref))
        rows.append(
            AnalysisRow(
                t=t,
                det=c.det,
                psi=psi,
                log_snr=lam,
                log_snr_rate=lam_dot,
                phi_to_ref=phi,
                error=error,
            )
        )
    return rows
