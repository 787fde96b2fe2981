"""Forward corruption, exact reverse processes, and error-injection probes.

The reverse process here never integrates an ODE: at each step the current
(state, target) pair is solved exactly for the data/noise estimates and the
state is re-synthesized at the earlier time.  With an exact target this makes
any number of steps equivalent to one step, which is what lets the
error-injection experiment isolate the amplification factor exactly.

Reverse runs use a uniform time grid from ``tf - clamp_eps`` down to ``t0``.
The final point is the exact start of the forward process, where the state
row is (1, 0) and the re-synthesized state IS the data estimate; inversions
only ever happen at strictly later times, so the rank-deficient endpoint of
the DDPM data-prediction family is never solved against.

Stochastic steps take an explicit seed and draw from a counter-based
generator, so results are reproducible and independent of evaluation order.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .conversions import Observation, _as_vector, invert
from .errors import NotDdpm, SingularParameterization, TimeOrder
from .schedules import DDPM_FAMILIES, Schedule, coefficients


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))


@dataclass(frozen=True)
class OraclePredictor:
    """Stand-in for a trained network that returns the exact target.

    ``delta`` is an optional additive perturbation modelling a fitting
    error.  It is applied at every query time, or only when the query time
    equals ``delta_time`` (callers must pass the identical float).
    """

    z_true: np.ndarray
    eps_true: np.ndarray
    delta: np.ndarray | None = None
    delta_time: float | None = None

    def __post_init__(self) -> None:
        z = _as_vector(self.z_true, "z_true")
        eps = _as_vector(self.eps_true, "eps_true")
        if z.shape != eps.shape:
            raise ValueError(f"z_true and eps_true must match, got {z.shape} vs {eps.shape}")
        object.__setattr__(self, "z_true", z)
        object.__setattr__(self, "eps_true", eps)
        if self.delta is not None:
            delta = _as_vector(self.delta, "delta")
            if delta.shape != z.shape:
                raise ValueError(f"delta must match z_true, got {delta.shape} vs {z.shape}")
            object.__setattr__(self, "delta", delta)

    def target(self, schedule: Schedule, t: float) -> np.ndarray:
        """Exact target a21(t) z + a22(t) eps, plus the injected error if due."""
        c = coefficients(schedule, t)
        value = c.a21 * self.z_true + c.a22 * self.eps_true
        if self.delta is not None and (self.delta_time is None or float(t) == self.delta_time):
            value = value + self.delta
        return value

    def state(self, schedule: Schedule, t: float) -> np.ndarray:
        """Exact noisy state at ``t``."""
        return forward(schedule, self.z_true, self.eps_true, t)


@dataclass(frozen=True)
class Trajectory:
    """Ordered (time, state) sequence from a forward scan or a reverse run."""

    steps: tuple[tuple[float, np.ndarray], ...]
    schedule: Schedule
    seed: int | None = None

    def __post_init__(self) -> None:
        times = [t for t, _ in self.steps]
        if len(times) >= 2:
            diffs = np.diff(times)
            if not (np.all(diffs > 0) or np.all(diffs < 0)):
                raise ValueError("trajectory times must be strictly monotone")

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.steps])

    @property
    def final_state(self) -> np.ndarray:
        return self.steps[-1][1]

    def rows(self) -> Iterator[tuple[int, float, int, float]]:
        """Yield (step_index, t, coordinate_index, x_value) rows for CSV."""
        for k, (t, x) in enumerate(self.steps):
            for i, v in enumerate(x):
                yield k, t, i, float(v)


def forward(schedule: Schedule, z: np.ndarray, eps: np.ndarray, t: float) -> np.ndarray:
    """Noisy state a11(t) z + a12(t) eps."""
    c = coefficients(schedule, t)
    return c.a11 * np.asarray(z, dtype=float) + c.a12 * np.asarray(eps, dtype=float)


def _resynthesize(schedule: Schedule, obs: Observation, t_prime: float) -> np.ndarray:
    """Solve at obs.t, re-synthesize the state at t_prime (no order check)."""
    pair = invert(schedule, obs)
    c = coefficients(schedule, t_prime)
    return c.a11 * pair.z + c.a12 * pair.eps


def reverse_step(schedule: Schedule, obs: Observation, t_prime: float) -> np.ndarray:
    """One deterministic reverse step from ``obs.t`` to the earlier ``t_prime``.

    With an exact target the result equals the exact forward state at
    ``t_prime``; a target error ``delta`` at ``obs.t`` shows up here as
    ``phi(obs.t, t_prime) * delta``.

    Raises:
        TimeOrder: if ``t_prime`` is not strictly earlier than ``obs.t``.
        SingularParameterization: if the system at ``obs.t`` is singular.
    """
    t_prime = float(t_prime)
    if t_prime >= obs.t:
        raise TimeOrder(f"t_prime={t_prime} must be < t={obs.t}")
    return _resynthesize(schedule, obs, t_prime)


def reverse_trajectory(
    schedule: Schedule,
    predictor: OraclePredictor,
    n_steps: int,
    x_init: np.ndarray | None = None,
) -> Trajectory:
    """Run the reverse process on a uniform grid from ``tf - clamp_eps`` to ``t0``.

    When ``x_init`` is absent the run starts from the predictor's exact
    state at ``tf - clamp_eps``.  With an exact predictor the final state
    equals the true data for any step count, because every step re-solves
    the system exactly.
    """
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    domain = schedule.domain
    ts = np.linspace(domain.tf - domain.clamp_eps, domain.t0, n_steps + 1)
    x = predictor.state(schedule, ts[0]) if x_init is None else _as_vector(x_init, "x_init")
    steps = [(float(ts[0]), x)]
    for k in range(n_steps):
        obs = Observation(t=ts[k], x=x, f=predictor.target(schedule, ts[k]))
        x = reverse_step(schedule, obs, ts[k + 1])
        steps.append((float(ts[k + 1]), x))
    return Trajectory(steps=tuple(steps), schedule=schedule, seed=None)


class VarianceMode(enum.Enum):
    """Variance choice of the stochastic reverse step."""

    DDPM_POSTERIOR = "ddpm_posterior"
    DETERMINISTIC = "deterministic"


def ddpm_stochastic_step(
    schedule: Schedule,
    obs: Observation,
    t_prime: float,
    variance_mode: VarianceMode,
    rng_seed: int,
) -> np.ndarray:
    """One ancestral-sampler step for the DDPM families, or its zero-noise limit.

    The posterior mode returns ``mu + var_sqrt * xi`` with variance
    ``var = ((1 - alpha'^2) / (1 - alpha^2)) * (1 - alpha^2 / alpha'^2)``
    and ``xi`` standard normal from a generator keyed by ``rng_seed``.  The
    deterministic mode shares the exact re-synthesis code path, so it is
    bit-identical to :func:`reverse_step`.  Coincident times degenerate to
    returning the state unchanged.

    Raises:
        NotDdpm: for non-DDPM families.
        TimeOrder: if ``t_prime`` is later than ``obs.t``.
    """
    if schedule.family not in DDPM_FAMILIES:
        raise NotDdpm(f"{schedule.family.value} has no ancestral variance choice")
    t_prime = float(t_prime)
    if t_prime > obs.t:
        raise TimeOrder(f"t_prime={t_prime} must be <= t={obs.t}")
    if t_prime == obs.t:
        return obs.x.copy()
    if variance_mode is VarianceMode.DETERMINISTIC:
        return _resynthesize(schedule, obs, t_prime)

    alpha_t = coefficients(schedule, obs.t).a11
    alpha_p = coefficients(schedule, t_prime).a11
    if 1.0 - alpha_t * alpha_t == 0.0:
        # alpha_t rounds to 1 for t below ~3e-9: the state carries no noise yet
        raise SingularParameterization(
            f"posterior variance undefined at t={obs.t}: 1 - alpha_t^2 rounds to 0"
        )
    z_hat = invert(schedule, obs).z
    beta = 1.0 - (alpha_t * alpha_t) / (alpha_p * alpha_p)
    var = (1.0 - alpha_p * alpha_p) / (1.0 - alpha_t * alpha_t) * beta
    radicand = 1.0 - alpha_p * alpha_p - var
    if radicand < 0.0:
        # the exact value is a square; rounding can push the subtraction below 0
        warnings.warn(
            f"posterior-mean radicand {radicand:.3e} clamped to 0 at t'={t_prime}",
            RuntimeWarning,
            stacklevel=2,
        )
        radicand = 0.0
    mu = alpha_p * z_hat + math.sqrt(radicand) * (obs.x - alpha_t * z_hat) / math.sqrt(
        1.0 - alpha_t * alpha_t
    )
    return mu + math.sqrt(var) * _rng(rng_seed).standard_normal(mu.shape)


def measure_amplification(
    schedule: Schedule, t: float, t_prime: float, delta_norm: float
) -> float:
    """Empirically measure error amplification by injecting a target error.

    Runs one reverse step twice, with the exact oracle and with the target
    perturbed by ``delta`` at ``t``, and returns ``|delta_x| / |delta|``.
    Linearity makes the ratio equal to ``|phi(t, t_prime)|`` up to rounding,
    independent of the perturbation direction.
    """
    if delta_norm <= 0:
        raise ValueError(f"delta_norm must be positive, got {delta_norm}")
    t = float(t)
    z, eps = np.array([1.0]), np.array([-0.5])
    exact = OraclePredictor(z_true=z, eps_true=eps)
    perturbed = OraclePredictor(
        z_true=z, eps_true=eps, delta=np.array([delta_norm]), delta_time=t
    )
    x = exact.state(schedule, t)
    base = reverse_step(schedule, Observation(t=t, x=x, f=exact.target(schedule, t)), t_prime)
    bumped = reverse_step(
        schedule, Observation(t=t, x=x, f=perturbed.target(schedule, t)), t_prime
    )
    return float(np.linalg.norm(bumped - base) / delta_norm)
