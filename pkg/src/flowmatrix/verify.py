"""The built-in verification suite behind ``flowmatrix verify``.

Each analytic claim the library makes gets one numeric check with an explicit
tolerance: endpoint limits, variance preservation, monotone log-SNR, the
closed-form correlation per family, determinant constancy, the
finite-difference derivative identity, the preconditioner equivalence, the
trig-flow rescaling, round-trip inversion, exact-oracle reconstruction,
analytic-vs-injected amplification, and the Monte Carlo estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import pearson, snr
from .config import RunConfig, distribution_from_config
from .conversions import Observation, invert, velocity_field
from .dynamics import (
    OraclePredictor,
    VarianceMode,
    ddpm_stochastic_step,
    forward,
    measure_amplification,
    reverse_trajectory,
)
from .empirical import estimate_pearson, estimate_variance, standard_normal, two_mode_mixture
from .schedules import (
    EXACT_VELOCITY_FAMILIES,
    TABLE_FAMILIES,
    VARIANCE_PRESERVING_FAMILIES,
    Family,
    Schedule,
    check_derivative_relation,
    check_limits,
    clamped_grid,
    coefficients,
    edm_preconditioners,
    make_schedule,
)
from .analysis import amplification

_LIMIT_TOLS = {
    Family.DDPM_NOISE_PRED: 1e-9,
    Family.DDPM_DATA_PRED: 1e-9,
    Family.EDM_COMMON: 1e-2,  # reaches its limits only as tf -> infinity
    Family.TRIG_FLOW: 1e-9,
    Family.TRIG_FLOW_UNIT: 1e-9,
    Family.RECTIFIED_FLOW: 1e-12,
}


@dataclass(frozen=True)
class CheckResult:
    """One named check: a measured residual against a tolerance."""

    name: str
    measured: float
    tol: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.measured < self.tol


def _rf_psi(t: float) -> float:
    return (2.0 * t - 1.0) / math.sqrt(2.0 * ((t - 1.0) ** 2 + t * t))


def _psi_reference(schedule: Schedule, t: float) -> float:
    c = coefficients(schedule, t)
    return {
        Family.DDPM_NOISE_PRED: c.a12,
        Family.DDPM_DATA_PRED: c.a11,
        Family.EDM_COMMON: 0.0,
        Family.TRIG_FLOW: 0.0,
        Family.TRIG_FLOW_UNIT: 0.0,
        Family.RECTIFIED_FLOW: _rf_psi(t),
    }[schedule.family]


def _check_state_variance(schedule: Schedule) -> CheckResult:
    grid = clamped_grid(schedule, 1000)
    if schedule.family in VARIANCE_PRESERVING_FAMILIES:
        err = max(abs(coefficients(schedule, t).a11 ** 2 + coefficients(schedule, t).a12 ** 2 - 1.0) for t in grid)
        return CheckResult(f"state_variance[{schedule.family.value}]", err, 1e-12, "a11^2+a12^2 == 1")
    err = max(
        abs(coefficients(schedule, t).a11 ** 2 + coefficients(schedule, t).a12 ** 2 - ((1 - t) ** 2 + t * t))
        for t in grid
    )
    return CheckResult(f"state_variance[{schedule.family.value}]", err, 1e-12, "(1-t)^2 + t^2")


def _check_monotone_log_snr(schedule: Schedule) -> CheckResult:
    lams = [snr(schedule, t)[0] for t in clamped_grid(schedule, 1000)]
    worst = float(np.max(np.diff(lams)))
    return CheckResult(
        f"monotone_log_snr[{schedule.family.value}]", worst, 0.0, "max forward difference"
    )


def _check_pearson_closed_form(schedule: Schedule) -> CheckResult:
    err = max(
        abs(pearson(schedule, t) - _psi_reference(schedule, t))
        for t in clamped_grid(schedule, 1000)
    )
    return CheckResult(f"pearson_closed_form[{schedule.family.value}]", err, 1e-12)


def _check_round_trip(schedule: Schedule, seed: int) -> CheckResult:
    rng = np.random.Generator(np.random.Philox(key=seed))
    lo, hi = schedule.domain.clamped
    worst = 0.0
    for _ in range(200):
        t = float(rng.uniform(lo, hi))
        z = rng.standard_normal(8)
        eps = rng.standard_normal(8)
        obs = Observation(t=t, x=forward(schedule, z, eps, t), f=forward_target(schedule, z, eps, t))
        pair = invert(schedule, obs)
        err = np.linalg.norm(np.concatenate([pair.z - z, pair.eps - eps]))
        scale = np.linalg.norm(np.concatenate([z, eps]))
        worst = max(worst, float(err / scale))
    return CheckResult(f"round_trip[{schedule.family.value}]", worst, 1e-10, "200 random (z, eps, t)")


def forward_target(schedule: Schedule, z: np.ndarray, eps: np.ndarray, t: float) -> np.ndarray:
    """Exact target row a21(t) z + a22(t) eps."""
    c = coefficients(schedule, t)
    return c.a21 * np.asarray(z, float) + c.a22 * np.asarray(eps, float)


def _check_reconstruction(schedule: Schedule, seed: int) -> CheckResult:
    rng = np.random.Generator(np.random.Philox(key=seed))
    z = rng.standard_normal(6)
    eps = rng.standard_normal(6)
    oracle = OraclePredictor(z_true=z, eps_true=eps)
    worst = 0.0
    for n_steps in (1, 50):
        final = reverse_trajectory(schedule, oracle, n_steps).final_state
        worst = max(worst, float(np.linalg.norm(final - z) / np.linalg.norm(z)))
    return CheckResult(
        f"exact_reconstruction[{schedule.family.value}]", worst, 1e-8, "steps in {1, 50}"
    )


def _check_empirical_amplification(schedule: Schedule, seed: int) -> CheckResult:
    rng = np.random.Generator(np.random.Philox(key=seed))
    lo, hi = schedule.domain.clamped
    worst = 0.0
    for _ in range(20):
        t_a, t_b = rng.uniform(lo, hi, size=2)
        t, t_prime = (float(max(t_a, t_b)), float(min(t_a, t_b)))
        if t == t_prime:
            continue
        measured = measure_amplification(schedule, t, t_prime, 1e-3)
        worst = max(worst, abs(measured - abs(amplification(schedule, t, t_prime))))
    return CheckResult(
        f"empirical_amplification[{schedule.family.value}]", worst, 1e-9, "20 random (t, t')"
    )


def _check_det_constancy(schedule: Schedule) -> CheckResult:
    err = max(abs(abs(coefficients(schedule, t).det) - 1.0) for t in clamped_grid(schedule, 1000))
    return CheckResult(f"det_constancy[{schedule.family.value}]", err, 1e-12, "|det| == 1")


def _check_velocity_target(schedule: Schedule, seed: int) -> CheckResult:
    rng = np.random.Generator(np.random.Philox(key=seed))
    worst = 0.0
    for t in clamped_grid(schedule, 51):
        z = rng.standard_normal(4)
        eps = rng.standard_normal(4)
        obs = Observation(
            t=float(t),
            x=forward(schedule, z, eps, t),
            f=forward_target(schedule, z, eps, t),
        )
        worst = max(worst, float(np.max(np.abs(velocity_field(schedule, obs) - obs.f))))
    return CheckResult(
        f"velocity_equals_target[{schedule.family.value}]", worst, 1e-12, "exact oracle"
    )


def _check_trig_rescaling(clamp_eps: float) -> CheckResult:
    unit = make_schedule(Family.TRIG_FLOW_UNIT, clamp_eps=clamp_eps)
    trig = make_schedule(Family.TRIG_FLOW, clamp_eps=clamp_eps)
    err = 0.0
    for t in clamped_grid(unit, 500):
        cu = coefficients(unit, t)
        ct = coefficients(trig, math.pi * t / 2.0)
        err = max(
            err,
            abs(cu.a11 - ct.a11),
            abs(cu.a12 - ct.a12),
            abs(cu.a21 - ct.a21),
            abs(cu.a22 - ct.a22),
        )
    return CheckResult("trig_flow_unit_rescaling", err, 1e-12, "componentwise vs pi*t/2")


def _check_edm_reparameterization(sigma_d: float, clamp_eps: float) -> CheckResult:
    schedule = make_schedule(Family.EDM_COMMON, sigma_d=sigma_d, clamp_eps=clamp_eps)
    err = 0.0
    for t in clamped_grid(schedule, 500):
        pre = edm_preconditioners(sigma_d, float(t))
        c = coefficients(schedule, t)
        err = max(err, abs(sigma_d * pre.c_in - c.a11), abs(t * pre.c_in - c.a12))
    return CheckResult(
        "edm_reparameterization", err, 1e-12, "(sigma_d, t) * c_in vs (a11, a12)"
    )


def _check_mc_pearson(schedule: Schedule, t: float, n: int, seed: int, mixture: bool) -> CheckResult:
    dist = two_mode_mixture() if mixture else standard_normal()
    est = estimate_pearson(schedule, dist, t, n, seed)
    expected = pearson(schedule, t)
    label = "mixture" if mixture else "normal"
    return CheckResult(
        f"mc_pearson[{schedule.family.value}/{label}]",
        abs(est.value - expected),
        4.0 * est.std_error,
        f"t={t}, n={n}",
    )


def _check_mc_variance(schedule: Schedule, t: float, expected: float, n: int, seed: int) -> CheckResult:
    est = estimate_variance(schedule, standard_normal(dim=8), t, n, seed)
    return CheckResult(
        f"mc_variance[{schedule.family.value}]",
        abs(est.value - expected),
        5.0 * est.std_error,
        f"t={t}, expected={expected:g}",
    )


def _check_posterior_variance(seed: int, n_seeds: int = 20000) -> CheckResult:
    schedule = make_schedule(Family.DDPM_NOISE_PRED)
    t, t_prime = 0.8, 0.7
    z = np.array([0.3])
    eps = np.array([-1.2])
    oracle = OraclePredictor(z_true=z, eps_true=eps)
    obs = Observation(t=t, x=oracle.state(schedule, t), f=oracle.target(schedule, t))
    draws = np.array(
        [
            ddpm_stochastic_step(schedule, obs, t_prime, VarianceMode.DDPM_POSTERIOR, seed + k)[0]
            for k in range(n_seeds)
        ]
    )
    alpha_t = coefficients(schedule, t).a11
    alpha_p = coefficients(schedule, t_prime).a11
    beta = 1.0 - alpha_t**2 / alpha_p**2
    expected = (1.0 - alpha_p**2) / (1.0 - alpha_t**2) * beta
    return CheckResult(
        "ddpm_posterior_variance",
        abs(float(draws.var(ddof=1)) / expected - 1.0),
        0.02,
        f"{n_seeds} seeds at (t, t')=({t}, {t_prime})",
    )


def run_verification(config: RunConfig) -> list[CheckResult]:
    """Run the whole suite with the configured grids, sizes, and seeds."""
    results: list[CheckResult] = []
    seeds = iter(np.random.SeedSequence(config.seed).generate_state(64).tolist())

    schedules = [
        make_schedule(f, sigma_d=config.sigma_d, clamp_eps=config.clamp_eps, alpha_fn=config.alpha_fn)
        for f in TABLE_FAMILIES
    ]
    for schedule_ in schedules:
        family = schedule_.family
        report = check_limits(schedule_, _LIMIT_TOLS[family])
        results.append(
            CheckResult(f"limits[{family.value}]", report.max_residual, report.tol, "exact endpoints")
        )
        results.append(_check_state_variance(schedule_))
        results.append(_check_monotone_log_snr(schedule_))
        results.append(_check_pearson_closed_form(schedule_))
        results.append(_check_round_trip(schedule_, next(seeds)))
        results.append(_check_reconstruction(schedule_, next(seeds)))
        results.append(_check_empirical_amplification(schedule_, next(seeds)))
        if family not in (Family.DDPM_NOISE_PRED, Family.DDPM_DATA_PRED):
            results.append(_check_det_constancy(schedule_))
        if family in EXACT_VELOCITY_FAMILIES:
            report = check_derivative_relation(schedule_, h=1e-5, tol=1e-8)
            results.append(
                CheckResult(
                    f"derivative_relation[{family.value}]",
                    report.max_error,
                    report.tol,
                    f"central differences, h={report.h:g}",
                )
            )
            results.append(_check_velocity_target(schedule_, next(seeds)))

    results.append(_check_trig_rescaling(config.clamp_eps))
    results.append(_check_edm_reparameterization(config.sigma_d, config.clamp_eps))

    trig = make_schedule(Family.TRIG_FLOW, clamp_eps=config.clamp_eps)
    rf = make_schedule(Family.RECTIFIED_FLOW, clamp_eps=config.clamp_eps)
    unit = make_schedule(Family.TRIG_FLOW_UNIT, clamp_eps=config.clamp_eps)
    results.append(_check_mc_pearson(trig, 0.7, config.mc_n, next(seeds), mixture=False))
    results.append(_check_mc_pearson(rf, 0.25, config.mc_n, next(seeds), mixture=True))
    results.append(_check_mc_variance(unit, 0.31, 1.0, config.mc_n, next(seeds)))
    results.append(_check_mc_variance(rf, 0.5, 0.5, config.mc_n, next(seeds)))
    results.append(_check_posterior_variance(next(seeds)))
    return results
