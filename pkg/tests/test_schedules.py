import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flowmatrix import (
    Family,
    NotFlowMatching,
    OutOfDomain,
    Schedule,
    TimeDomain,
    VARIANCE_PRESERVING_FAMILIES,
    check_derivative_relation,
    check_limits,
    clamped_grid,
    coefficients,
    derivatives,
    edm_preconditioners,
    make_schedule,
)
from conftest import rng_for


class TestCoefficients:
    def test_trig_flow_at_start_is_identity(self):
        c = coefficients(make_schedule(Family.TRIG_FLOW), 0.0)
        assert (c.a11, c.a12, c.a21, c.a22, c.det) == (1.0, 0.0, 0.0, 1.0, 1.0)

    def test_rectified_flow_midpoint(self):
        c = coefficients(make_schedule(Family.RECTIFIED_FLOW), 0.5)
        assert (c.a11, c.a12, c.a21, c.a22) == (0.5, 0.5, -1.0, 1.0)
        assert c.det == 1.0

    def test_edm_common_halfpoint(self):
        # high-precision value of 0.5 / sqrt(0.5^2 + 0.5^2)
        expected = 0.7071067811865475244
        c = coefficients(make_schedule(Family.EDM_COMMON, sigma_d=0.5), 0.5)
        assert c.a11 == pytest.approx(expected, abs=1e-15)
        assert c.a12 == pytest.approx(expected, abs=1e-15)
        assert c.a21 == c.a12 and c.a22 == -c.a11
        assert c.det == pytest.approx(-1.0, abs=1e-15)

    def test_determinant_stored_exactly(self, any_schedule):
        for t in clamped_grid(any_schedule, 17):
            c = coefficients(any_schedule, t)
            assert c.det == c.a11 * c.a22 - c.a12 * c.a21

    def test_out_of_domain_raises(self, any_schedule):
        with pytest.raises(OutOfDomain):
            coefficients(any_schedule, any_schedule.domain.tf + 0.5)
        with pytest.raises(OutOfDomain):
            coefficients(any_schedule, any_schedule.domain.t0 - 1e-9)

    def test_exact_endpoints_are_allowed(self, any_schedule):
        coefficients(any_schedule, any_schedule.domain.t0)
        coefficients(any_schedule, any_schedule.domain.tf)


class TestInvariants:
    @pytest.mark.parametrize("family", sorted(VARIANCE_PRESERVING_FAMILIES, key=lambda f: f.value), ids=lambda f: f.value)
    def test_variance_preserving_on_grid(self, family):
        schedule = make_schedule(family)
        for t in clamped_grid(schedule, 1000):
            c = coefficients(schedule, t)
            assert abs(c.a11**2 + c.a12**2 - 1.0) < 1e-12

    def test_rectified_flow_is_not_variance_preserving(self):
        schedule = make_schedule(Family.RECTIFIED_FLOW)
        for t in np.linspace(0.05, 0.95, 50):
            c = coefficients(schedule, t)
            assert c.a11**2 + c.a12**2 == pytest.approx((1 - t) ** 2 + t**2, abs=1e-15)
            assert c.a11**2 + c.a12**2 < 1.0

    def test_forward_row_monotone(self, any_schedule):
        grid = clamped_grid(any_schedule, 500)
        a11 = [coefficients(any_schedule, t).a11 for t in grid]
        a12 = [coefficients(any_schedule, t).a12 for t in grid]
        assert np.all(np.diff(a11) < 0)
        assert np.all(np.diff(a12) > 0)

    @given(u=st.floats(min_value=0.0, max_value=1.0))
    @settings(max_examples=200)
    def test_variance_preservation_property(self, u):
        for family in sorted(VARIANCE_PRESERVING_FAMILIES, key=lambda f: f.value):
            schedule = make_schedule(family)
            t = schedule.domain.t0 + u * (schedule.domain.tf - schedule.domain.t0)
            c = coefficients(schedule, t)
            assert abs(c.a11**2 + c.a12**2 - 1.0) < 1e-12


class TestLimits:
    def test_trig_flow_unit_limits_tight(self):
        report = check_limits(make_schedule(Family.TRIG_FLOW_UNIT), tol=1e-9)
        assert report.passed
        assert all(r < 1e-9 for r in report.residuals.values())

    def test_ddpm_cosine_limits_tight(self):
        assert check_limits(make_schedule(Family.DDPM_NOISE_PRED), tol=1e-9).passed

    def test_edm_limits_loose(self):
        # a12 residual at tf=80 is 1 - 80/sqrt(0.25 + 6400) = 1.9530677814e-5
        report = check_limits(make_schedule(Family.EDM_COMMON, sigma_d=0.5), tol=1e-2)
        assert report.passed
        assert report.residuals["a12_at_end"] == pytest.approx(1.9530677814e-5, rel=1e-9)
        assert not check_limits(make_schedule(Family.EDM_COMMON), tol=1e-9).passed


class TestDerivativeRelation:
    def test_rectified_flow_exact(self):
        report = check_derivative_relation(make_schedule(Family.RECTIFIED_FLOW), h=1e-5, tol=1e-8)
        assert report.passed

    def test_trig_flow_second_order_accurate(self):
        report = check_derivative_relation(make_schedule(Family.TRIG_FLOW), h=1e-5, tol=1e-8)
        assert report.passed
        assert report.max_error < 1e-9  # central differences are O(h^2)

    def test_ddpm_rejected(self):
        with pytest.raises(NotFlowMatching):
            check_derivative_relation(make_schedule(Family.DDPM_NOISE_PRED))

    def test_trig_flow_unit_shows_rescaling_factor(self):
        # the unit-interval target is (2/pi) * velocity, so the raw identity
        # misses by (pi/2 - 1) * max|sin| on the grid
        report = check_derivative_relation(make_schedule(Family.TRIG_FLOW_UNIT), h=1e-5, tol=1e-8)
        assert not report.passed
        assert report.max_error == pytest.approx(math.pi / 2 - 1, abs=1e-3)

    def test_analytic_derivatives_match_finite_differences(self, any_schedule):
        h = 1e-6
        lo, hi = any_schedule.domain.clamped
        for t in np.linspace(lo + h, hi - h, 31):
            da11, da12 = derivatives(any_schedule, t)
            fd11 = (coefficients(any_schedule, t + h).a11 - coefficients(any_schedule, t - h).a11) / (2 * h)
            fd12 = (coefficients(any_schedule, t + h).a12 - coefficients(any_schedule, t - h).a12) / (2 * h)
            scale = max(1.0, abs(da11), abs(da12))
            assert abs(da11 - fd11) / scale < 1e-7
            assert abs(da12 - fd12) / scale < 1e-7


class TestEdmReparameterization:
    def test_derived_rows_match_coefficients(self):
        schedule = make_schedule(Family.EDM_COMMON, sigma_d=0.5)
        for t in clamped_grid(schedule, 500):
            pre = edm_preconditioners(0.5, float(t))
            c = coefficients(schedule, t)
            assert abs(0.5 * pre.c_in - c.a11) < 1e-12
            assert abs(t * pre.c_in - c.a12) < 1e-12

    def test_full_preconditioning_chain(self):
        # scaled forward y = sigma_d z + t eps, state x = c_in y, target
        # (sigma_d z - c_skip y) / c_out: must equal the coefficient rows
        rng = rng_for(5)
        sigma_d = 0.5
        schedule = make_schedule(Family.EDM_COMMON, sigma_d=sigma_d)
        z, eps = rng.standard_normal(16), rng.standard_normal(16)
        for t in (0.01, 0.5, 1.0, 7.3, 79.0):
            pre = edm_preconditioners(sigma_d, t)
            y = sigma_d * z + t * eps
            c = coefficients(schedule, t)
            np.testing.assert_allclose(pre.c_in * y, c.a11 * z + c.a12 * eps, atol=1e-12)
            np.testing.assert_allclose(
                (sigma_d * z - pre.c_skip * y) / pre.c_out,
                c.a21 * z + c.a22 * eps,
                atol=1e-12,
            )

    def test_c_noise_is_time(self):
        assert edm_preconditioners(0.5, 3.25).c_noise == 3.25


class TestTrigRescaling:
    def test_unit_equals_trig_at_mapped_times(self):
        unit = make_schedule(Family.TRIG_FLOW_UNIT)
        trig = make_schedule(Family.TRIG_FLOW)
        for t in clamped_grid(unit, 500):
            cu = coefficients(unit, t)
            ct = coefficients(trig, math.pi * t / 2)
            for name in ("a11", "a12", "a21", "a22"):
                assert abs(getattr(cu, name) - getattr(ct, name)) < 1e-12


class TestValidation:
    def test_time_domain_rejects_bad_intervals(self):
        with pytest.raises(ValueError):
            TimeDomain(1.0, 0.0)
        with pytest.raises(ValueError):
            TimeDomain(0.0, 1.0, clamp_eps=0.0)
        with pytest.raises(ValueError):
            TimeDomain(0.0, 1.0, clamp_eps=0.6)

    def test_schedule_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            make_schedule(Family.EDM_COMMON, sigma_d=-1.0)
        with pytest.raises(ValueError):
            make_schedule(Family.DDPM_NOISE_PRED, alpha_fn="linear")
        with pytest.raises(ValueError):
            Schedule(family=Family.TRIG_FLOW, domain=TimeDomain(0.0, 2.0))

    def test_default_domains(self):
        assert make_schedule(Family.EDM_COMMON).domain.tf == 80.0
        assert make_schedule(Family.TRIG_FLOW).domain.tf == pytest.approx(math.pi / 2)
        assert make_schedule(Family.RECTIFIED_FLOW).domain.tf == 1.0

    def test_clamped_grid_bounds(self, any_schedule):
        grid = clamped_grid(any_schedule, 101)
        lo, hi = any_schedule.domain.clamped
        assert grid[0] == lo and grid[-1] == hi
        with pytest.raises(ValueError):
            clamped_grid(any_schedule, 0)
