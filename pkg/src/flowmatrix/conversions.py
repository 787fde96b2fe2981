"""Exact conversions between the network target and the (data, noise) pair.

At any nonsingular time the 2x2 system is invertible, so the noisy state and
the target value determine the data/noise pair exactly::

    z   = ( a22 * x - a12 * f) / det
    eps = (-a21 * x + a11 * f) / det

The consistency map (state -> data estimate) and the noise-prediction map
(state -> noise estimate) are the two rows of this solve.  The velocity
field is the time derivative of the forward interpolation expressed in terms
of ``(x, f)``.  All maps are linear in ``(x, f)`` and coordinatewise over
vectors of any dimension.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularParameterization
from .schedules import (
    SINGULAR_DET_TOL,
    CoeffMatrix,
    Schedule,
    coefficients,
    derivatives,
)


def _as_vector(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError(f"{name} must be a 1-D vector with at least one entry")
    return arr


@dataclass(frozen=True)
class StatePair:
    """Recovered data and noise estimates (equal-length vectors)."""

    z: np.ndarray
    eps: np.ndarray

    def __post_init__(self) -> None:
        z = _as_vector(self.z, "z")
        eps = _as_vector(self.eps, "eps")
        if z.shape != eps.shape:
            raise ValueError(f"z and eps must match, got {z.shape} vs {eps.shape}")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "eps", eps)


@dataclass(frozen=True)
class Observation:
    """A reverse-process observation: time, noisy state, and target value."""

    t: float
    x: np.ndarray
    f: np.ndarray

    def __post_init__(self) -> None:
        x = _as_vector(self.x, "x")
        f = _as_vector(self.f, "f")
        if x.shape != f.shape:
            raise ValueError(f"x and f must match, got {x.shape} vs {f.shape}")
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "f", f)


def _nonsingular(schedule: Schedule, t: float) -> CoeffMatrix:
    c = coefficients(schedule, t)
    if abs(c.det) < SINGULAR_DET_TOL:
        raise SingularParameterization(
            f"coefficient matrix is singular at t={t} (det={c.det:.3e})"
        )
    return c


def invert(schedule: Schedule, obs: Observation) -> StatePair:
    """Solve the system at ``obs.t`` for the data/noise pair.

    Near a vanishing determinant the solve stays finite but its relative
    error grows like cond(A) times machine epsilon.

    Raises:
        SingularParameterization: if |det| < 1e-12 at ``obs.t``.
        OutOfDomain: if ``obs.t`` is outside the domain.
    """
    c = _nonsingular(schedule, obs.t)
    z = (c.a22 * obs.x - c.a12 * obs.f) / c.det
    eps = (c.a11 * obs.f - c.a21 * obs.x) / c.det
    return StatePair(z=z, eps=eps)


def consistency(schedule: Schedule, obs: Observation) -> np.ndarray:
    """One-jump map from the noisy state directly to the data estimate."""
    return invert(schedule, obs).z


def noise_pred(schedule: Schedule, obs: Observation) -> np.ndarray:
    """Companion map from the noisy state to the noise estimate."""
    return invert(schedule, obs).eps


def velocity_field(schedule: Schedule, obs: Observation) -> np.ndarray:
    """Drift of the deterministic reverse flow, in terms of state and target.

    Computed as ``[(a11' a22 - a12' a21) x + (a11 a12' - a12 a11') f] / det``,
    the common-denominator arrangement of
    ``(a11'/a11) x - (a12 lambda'/2) G(x, f)``; the cleared form avoids
    cancellation between large intermediate terms when ``|det| == 1``.  For
    an exact target this equals ``a11' z + a12' eps``, and for the
    exact-velocity families it reproduces the target itself.

    Raises:
        SingularParameterization: at the endpoints (a11 or a12 not positive,
            so the log-SNR rate is undefined) or where det vanishes.
    """
    c = _nonsingular(schedule, obs.t)
    if c.a11 <= 0.0 or c.a12 <= 0.0:
        raise SingularParameterization(
            f"velocity undefined at t={obs.t}: requires a11 > 0 and a12 > 0"
        )
    da11, da12 = derivatives(schedule, obs.t)
    coeff_x = (da11 * c.a22 - da12 * c.a21) / c.det
    coeff_f = (c.a11 * da12 - c.a12 * da11) / c.det
    return coeff_x * obs.x + coeff_f * obs.f
