import math

import numpy as np
import pytest

import flowmatrix.schedules as schedules_mod
from flowmatrix import (
    DegenerateTarget,
    Family,
    FlowMatrixError,
    SingularParameterization,
    amplification,
    amplification_to_zero,
    clamped_grid,
    coefficients,
    make_schedule,
    pearson,
    snr,
    table_row,
)
from conftest import rng_for


def rf_psi(t: float) -> float:
    return (2 * t - 1) / math.sqrt(2 * ((t - 1) ** 2 + t**2))


class TestPearson:
    def test_edm_is_zero(self):
        assert abs(pearson(make_schedule(Family.EDM_COMMON, sigma_d=0.5), 3.7)) < 1e-12

    def test_rectified_flow_midpoint_is_zero(self):
        assert pearson(make_schedule(Family.RECTIFIED_FLOW), 0.5) == 0.0

    def test_rectified_flow_at_start(self):
        # closed form -1/sqrt(2); also checked below against a raw MC oracle
        value = pearson(make_schedule(Family.RECTIFIED_FLOW), 0.0)
        assert value == pytest.approx(-0.7071067811865476, abs=1e-12)

    def test_rectified_flow_matches_sample_correlation(self):
        # independent oracle: sample correlation of (x_t, target) pairs
        rng = rng_for(321)
        n = 10**5
        z, eps = rng.standard_normal(n), rng.standard_normal(n)
        schedule = make_schedule(Family.RECTIFIED_FLOW)
        for t in (0.0, 0.2, 0.7):
            x = (1 - t) * z + t * eps
            w = eps - z
            empirical = float(np.corrcoef(x, w)[0, 1])
            assert pearson(schedule, t) == pytest.approx(empirical, abs=3 / math.sqrt(n))

    def test_closed_forms_on_grid(self):
        references = {
            Family.DDPM_NOISE_PRED: lambda s, t: coefficients(s, t).a12,
            Family.DDPM_DATA_PRED: lambda s, t: coefficients(s, t).a11,
            Family.EDM_COMMON: lambda s, t: 0.0,
            Family.TRIG_FLOW: lambda s, t: 0.0,
            Family.TRIG_FLOW_UNIT: lambda s, t: 0.0,
            Family.RECTIFIED_FLOW: lambda s, t: rf_psi(t),
        }
        for family, reference in references.items():
            schedule = make_schedule(family)
            for t in clamped_grid(schedule, 250):
                assert abs(pearson(schedule, t) - reference(schedule, float(t))) < 1e-12

    def test_sign_structure_rectified_flow(self):
        schedule = make_schedule(Family.RECTIFIED_FLOW)
        assert all(pearson(schedule, t) < 0 for t in np.linspace(0.01, 0.49, 20))
        assert all(pearson(schedule, t) > 0 for t in np.linspace(0.51, 0.99, 20))

    def test_bounded_by_one(self, any_schedule):
        for t in clamped_grid(any_schedule, 200):
            assert abs(pearson(any_schedule, t)) <= 1 + 1e-12

    def test_degenerate_target_raises(self, monkeypatch):
        monkeypatch.setitem(
            schedules_mod._COEFFICIENT_FNS,
            Family.TRIG_FLOW,
            lambda s, t: (math.cos(t), math.sin(t), 0.0, 0.0),
        )
        with pytest.raises(DegenerateTarget):
            pearson(make_schedule(Family.TRIG_FLOW), 0.5)


class TestAmplification:
    def test_trig_flow_closed_form(self):
        value = amplification(make_schedule(Family.TRIG_FLOW), 1.0, 0.4)
        assert abs(value) == pytest.approx(math.sin(0.6), abs=1e-15)
        assert abs(value) == pytest.approx(0.5646424733950354, abs=1e-12)

    def test_coincident_times_give_zero(self):
        assert amplification(make_schedule(Family.RECTIFIED_FLOW), 0.3, 0.3) == 0.0

    def test_ddpm_noise_pred_frozen_value(self):
        # |sigma_0.1 alpha_0.9 - sigma_0.9 alpha_0.1| / alpha_0.9 with the
        # cosine curve, evaluated independently at 50 digits
        value = abs(amplification(make_schedule(Family.DDPM_NOISE_PRED), 0.9, 0.1))
        assert value == pytest.approx(6.0795842914191998, abs=1e-12)

    def test_numerator_antisymmetric(self, any_schedule):
        rng = rng_for(11)
        lo, hi = any_schedule.domain.clamped
        for _ in range(50):
            t_a, t_b = sorted(rng.uniform(lo, hi, size=2))
            if t_a == t_b:
                continue
            fwd = amplification(any_schedule, t_b, t_a) * coefficients(any_schedule, t_b).det
            rev = amplification(any_schedule, t_a, t_b) * coefficients(any_schedule, t_a).det
            assert fwd == pytest.approx(-rev, rel=1e-12, abs=1e-15)

    def test_table_closed_forms(self):
        sd = 0.5
        alpha = lambda t: math.cos(0.5 * math.pi * t)
        sigma = lambda t: math.sin(0.5 * math.pi * t)
        references = {
            Family.DDPM_NOISE_PRED: lambda t, u: abs(sigma(u) * alpha(t) - sigma(t) * alpha(u)) / alpha(t),
            Family.DDPM_DATA_PRED: lambda t, u: abs(sigma(u) * alpha(t) - sigma(t) * alpha(u)) / sigma(t),
            Family.EDM_COMMON: lambda t, u: sd * (t - u) / (math.hypot(sd, t) * math.hypot(sd, u)),
            Family.TRIG_FLOW: lambda t, u: math.sin(t - u),
            Family.RECTIFIED_FLOW: lambda t, u: t - u,
        }
        rng = rng_for(12)
        for family, reference in references.items():
            schedule = make_schedule(family, sigma_d=sd)
            lo, hi = schedule.domain.clamped
            for _ in range(50):
                u, t = sorted(rng.uniform(lo, hi, size=2))
                if u == t:
                    continue
                assert abs(amplification(schedule, t, u)) == pytest.approx(
                    reference(t, u), rel=1e-10, abs=1e-13
                )

    def test_singular_at_endpoint_raises(self):
        with pytest.raises(SingularParameterization):
            amplification(make_schedule(Family.DDPM_NOISE_PRED), 1.0, 0.2)
        with pytest.raises(SingularParameterization):
            amplification_to_zero(make_schedule(Family.DDPM_DATA_PRED), 0.0)


class TestAmplificationToZero:
    def test_data_prediction_is_one(self):
        schedule = make_schedule(Family.DDPM_DATA_PRED)
        for t in (1e-4, 0.3, 0.8, 1.0 - 1e-6):
            assert amplification_to_zero(schedule, t) == 1.0

    def test_rectified_flow_is_t(self):
        assert amplification_to_zero(make_schedule(Family.RECTIFIED_FLOW), 0.25) == 0.25

    def test_edm_value(self):
        value = amplification_to_zero(make_schedule(Family.EDM_COMMON, sigma_d=0.5), 0.5)
        assert value == pytest.approx(0.7071067811865475, abs=1e-12)

    def test_matches_two_time_formula_at_clamped_start(self):
        # agreement degrades linearly in clamp_eps, so use a tight clamp
        for family in (Family.TRIG_FLOW, Family.RECTIFIED_FLOW, Family.EDM_COMMON):
            schedule = make_schedule(family, clamp_eps=1e-10)
            lo, _ = schedule.domain.clamped
            for t in clamped_grid(schedule, 25)[1:]:
                direct = amplification_to_zero(schedule, t)
                clamped = abs(amplification(schedule, t, lo))
                assert abs(direct - clamped) < 1e-9

    def test_identity_guard_fires_for_shifted_domain(self):
        schedule = make_schedule(Family.EDM_COMMON, t0=1.0, tf=40.0)
        with pytest.raises(FlowMatrixError):
            amplification_to_zero(schedule, 10.0)


class TestSnr:
    def test_trig_flow_balance_point(self):
        lam, _ = snr(make_schedule(Family.TRIG_FLOW), math.pi / 4)
        assert lam == pytest.approx(0.0, abs=1e-12)

    def test_rectified_flow_midpoint(self):
        lam, _ = snr(make_schedule(Family.RECTIFIED_FLOW), 0.5)
        assert lam == 0.0

    def test_trig_flow_rate_frozen(self):
        # -2 / (sin(0.3) cos(0.3)), evaluated independently at 50 digits
        _, lam_dot = snr(make_schedule(Family.TRIG_FLOW), 0.3)
        assert lam_dot == pytest.approx(-7.0841287867509015, rel=1e-12)

    def test_rate_matches_finite_difference(self, any_schedule):
        h = 1e-5
        lo, hi = any_schedule.domain.clamped
        for t in np.linspace(lo + 2 * h, hi - 2 * h, 25):
            lam_minus, _ = snr(any_schedule, t - h)
            lam_plus, _ = snr(any_schedule, t + h)
            _, lam_dot = snr(any_schedule, t)
            fd = (lam_plus - lam_minus) / (2 * h)
            assert lam_dot == pytest.approx(fd, rel=1e-6, abs=1e-6)

    def test_rate_always_negative(self, any_schedule):
        for t in clamped_grid(any_schedule, 300):
            assert snr(any_schedule, t)[1] < 0

    def test_monotone_on_grid(self, any_schedule):
        lams = [snr(any_schedule, t)[0] for t in clamped_grid(any_schedule, 1000)]
        assert np.all(np.diff(lams) < 0)

    def test_singular_at_endpoints(self):
        schedule = make_schedule(Family.RECTIFIED_FLOW)
        with pytest.raises(SingularParameterization):
            snr(schedule, 0.0)
        with pytest.raises(SingularParameterization):
            snr(schedule, 1.0)


class TestDeterminant:
    @pytest.mark.parametrize(
        "family", [Family.EDM_COMMON, Family.TRIG_FLOW, Family.RECTIFIED_FLOW], ids=lambda f: f.value
    )
    def test_unit_determinant_families(self, family):
        schedule = make_schedule(family)
        for t in clamped_grid(schedule, 1000):
            assert abs(abs(coefficients(schedule, t).det) - 1.0) < 1e-12

    def test_ddpm_determinants_track_the_rows(self):
        noise = make_schedule(Family.DDPM_NOISE_PRED)
        data = make_schedule(Family.DDPM_DATA_PRED)
        for t in clamped_grid(noise, 200):
            assert coefficients(noise, t).det == coefficients(noise, t).a11
            assert coefficients(data, t).det == -coefficients(data, t).a12


class TestAmplificationOrdering:
    def test_unit_determinant_never_amplifies_more_than_noise_prediction(self):
        # same-forward-process comparison plus the two [0,1] flows: with
        # |det| == 1 the amplification is the bare numerator, while the
        # noise-prediction target divides by alpha_t < 1
        noise = make_schedule(Family.DDPM_NOISE_PRED)
        data = make_schedule(Family.DDPM_DATA_PRED)
        unit = make_schedule(Family.TRIG_FLOW_UNIT)
        trig = make_schedule(Family.TRIG_FLOW)
        rf = make_schedule(Family.RECTIFIED_FLOW)
        rng = rng_for(13)
        for _ in range(200):
            u, t = sorted(rng.uniform(1e-3, 1.0 - 1e-3, size=2))
            if u == t:
                continue
            bound = abs(amplification(noise, t, u))
            assert abs(amplification(unit, t, u)) <= bound + 1e-12
            assert abs(amplification(unit, t, u)) <= abs(amplification(data, t, u)) + 1e-12
            assert abs(amplification(trig, t, u)) <= bound + 1e-12
            assert abs(amplification(rf, t, u)) <= bound + 1e-12


class TestTableRow:
    def test_trig_flow_psi_column_is_zero(self):
        rows = table_row(make_schedule(Family.TRIG_FLOW), [0.2, 0.7, 1.3], t_ref=0.0)
        assert len(rows) == 3
        assert all(r.psi == 0.0 for r in rows)
        assert all(r.error is None for r in rows)

    def test_empty_grid(self):
        assert table_row(make_schedule(Family.TRIG_FLOW), [], t_ref=0.0) == []

    def test_rectified_flow_phi_column(self):
        rows = table_row(make_schedule(Family.RECTIFIED_FLOW), [0.1, 0.5, 0.9], t_ref=0.0)
        assert [r.phi_to_ref for r in rows] == pytest.approx([0.1, 0.5, 0.9], abs=1e-15)

    def test_log_snr_consistent_with_coefficients(self):
        schedule = make_schedule(Family.EDM_COMMON)
        for row in table_row(schedule, clamped_grid(schedule, 50), t_ref=0.0):
            c = coefficients(schedule, row.t)
            assert row.log_snr == pytest.approx(math.log(c.a11**2 / c.a12**2), rel=1e-12)

    def test_singular_points_become_markers_not_exceptions(self):
        noise_rows = table_row(make_schedule(Family.DDPM_NOISE_PRED), [0.5, 1.0], t_ref=0.0)
        assert noise_rows[1].phi_to_ref == math.inf  # det underflows at the end
        data_rows = table_row(make_schedule(Family.DDPM_DATA_PRED), [0.0, 0.5], t_ref=0.0)
        assert data_rows[0].phi_to_ref == math.inf
        assert data_rows[0].error is not None  # log-SNR is singular there too
        assert data_rows[0].log_snr == math.inf
