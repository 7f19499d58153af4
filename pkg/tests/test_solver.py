import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kvflow.errors import ConfigError, NumericError, ShapeError
from kvflow.fields import AnalyticField
from kvflow.metrics import convergence_order, rel_l2
from kvflow.solver import (
    EULER,
    INVERT,
    RF2,
    SAMPLE,
    CountingVelocity,
    SolverSchedule,
    cfg_velocity,
    estimate_velocity_derivative,
    euler_step,
    integrate,
    make_schedule,
    rf2_step,
)

Z2 = np.array([2.0], dtype=np.float32)

# recorded from the pre-build oracle run: LinearDecay sample-then-invert
# composition at n=50 with the second-order step gave rel_l2 2.6226e-06
LINDECAY_RF2_ROUNDTRIP_BOUND = 6.0e-6


class TestAnalyticFields:
    def test_zero(self):
        f = AnalyticField.zero()
        assert np.array_equal(f.velocity(Z2, 0.3), [0.0])
        assert np.array_equal(f.exact(Z2, 1.0, 0.0), [2.0])

    def test_constant(self):
        f = AnalyticField.constant(1.5)
        assert np.array_equal(f.velocity(Z2, 0.9), np.array([1.5], dtype=np.float32))
        assert np.allclose(f.exact(Z2, 1.0, 0.0), [0.5])

    def test_linear_decay(self):
        f = AnalyticField.linear_decay()
        assert np.array_equal(f.velocity(Z2, 0.0), np.array([-2.0], dtype=np.float32))
        assert np.allclose(f.exact(Z2, 1.0, 0.5), [2.0 * math.exp(0.5)])

    def test_time_poly(self):
        f = AnalyticField.time_poly()
        assert np.array_equal(f.velocity(Z2, 0.25), np.array([0.25], dtype=np.float32))
        assert np.allclose(f.exact(Z2, 0.0, 1.0), [2.5])

    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            AnalyticField("spline")


class TestSchedule:
    def test_uniform_sample_grid(self):
        s = make_schedule(2, SAMPLE)
        assert s.timesteps == (1.0, 0.5, 0.0)

    def test_uniform_invert_grid(self):
        s = make_schedule(2, INVERT)
        assert s.timesteps == (0.0, 0.5, 1.0)

    def test_fifty_step_grid(self):
        s = make_schedule(50, SAMPLE)
        assert len(s.timesteps) == 51
        assert s.timesteps[0] == 1.0 and s.timesteps[-1] == 0.0
        assert s.n_steps == 50

    def test_zero_steps_rejected(self):
        with pytest.raises(ConfigError):
            make_schedule(0, SAMPLE)

    def test_bad_endpoints_rejected(self):
        with pytest.raises(ConfigError):
            SolverSchedule((1.0, 0.1), EULER, SAMPLE)

    def test_monotonicity_must_match_direction(self):
        with pytest.raises(ConfigError):
            SolverSchedule((1.0, 0.2, 0.5, 0.0), RF2, SAMPLE)
        with pytest.raises(ConfigError):
            SolverSchedule((0.0, 0.5, 1.0), RF2, SAMPLE)

    def test_unknown_order_and_direction(self):
        with pytest.raises(ConfigError):
            SolverSchedule((1.0, 0.0), "rk4", SAMPLE)
        with pytest.raises(ConfigError):
            make_schedule(4, "sideways")


class TestEulerStep:
    def test_zero_field(self):
        out = euler_step(Z2, AnalyticField.zero().velocity, 1.0, 0.5)
        assert np.array_equal(out, Z2)

    def test_constant_field_arithmetic(self):
        z = np.array([0.0], dtype=np.float32)
        out = euler_step(z, AnalyticField.constant(1.0).velocity, 1.0, 0.5)
        assert np.array_equal(out, np.array([-0.5], dtype=np.float32))

    def test_linear_decay_against_exponential_oracle(self):
        f = AnalyticField.linear_decay()
        out = euler_step(Z2, f.velocity, 1.0, 0.5)
        assert float(out[0]) == 3.0
        exact = 2.0 * math.exp(0.5)
        assert abs(float(out[0]) - exact) == pytest.approx(0.297, abs=1e-3)

    def test_degenerate_step_rejected(self):
        with pytest.raises(ConfigError):
            euler_step(Z2, AnalyticField.zero().velocity, 0.5, 0.5)

    def test_non_finite_velocity_reports_time(self):
        def bad(z, t):
            return np.full_like(z, np.nan)

        with pytest.raises(NumericError, match="0.75"):
            euler_step(Z2, bad, 0.75, 0.5)


class TestVelocityDerivative:
    def test_time_poly_exact(self):
        f = AnalyticField.time_poly()
        v1 = estimate_velocity_derivative(f.velocity, Z2, 0.5, -0.5)
        assert np.array_equal(v1, np.array([1.0], dtype=np.float32))

    def test_constant_field_zero(self):
        f = AnalyticField.constant(3.0)
        v1 = estimate_velocity_derivative(f.velocity, Z2, 1.0, -0.5)
        assert np.array_equal(v1, np.array([0.0], dtype=np.float32))

    def test_linear_decay_hand_value(self):
        f = AnalyticField.linear_decay()
        v1 = estimate_velocity_derivative(f.velocity, Z2, 1.0, -0.5)
        assert np.array_equal(v1, np.array([2.0], dtype=np.float32))

    def test_zero_delta_rejected(self):
        with pytest.raises(ConfigError):
            estimate_velocity_derivative(AnalyticField.zero().velocity, Z2, 0.5, 0.0)

    def test_base_velocity_saves_an_evaluation(self):
        f = CountingVelocity(AnalyticField.time_poly().velocity)
        v = f(Z2, 0.5)
        f.calls = 0
        estimate_velocity_derivative(f, Z2, 0.5, -0.5, v_base=v)
        assert f.calls == 1

    def test_probe_time_clamped_to_unit_interval(self):
        seen = []

        def spy(z, t):
            seen.append(t)
            return AnalyticField.time_poly().velocity(z, t)

        estimate_velocity_derivative(spy, Z2, 1.0, 0.5, v_base=AnalyticField.time_poly().velocity(Z2, 1.0))
        assert seen == [1.0]

    def test_clamp_does_not_affect_interior_probes(self):
        seen = []

        def spy(z, t):
            seen.append(t)
            return AnalyticField.time_poly().velocity(z, t)

        estimate_velocity_derivative(spy, Z2, 0.5, -0.5)
        assert seen == [0.5, 0.25]


class TestRf2Step:
    def test_zero_field(self):
        out = rf2_step(Z2, AnalyticField.zero().velocity, 1.0, 0.5)
        assert np.array_equal(out, Z2)

    def test_constant_field_degenerates_to_euler(self):
        f = AnalyticField.constant(2.5)
        a = rf2_step(Z2, f.velocity, 1.0, 0.25)
        b = euler_step(Z2, f.velocity, 1.0, 0.25)
        assert np.array_equal(a, b)

    def test_linear_decay_hand_value(self):
        f = AnalyticField.linear_decay()
        out = rf2_step(Z2, f.velocity, 1.0, 0.5)
        assert float(out[0]) == 3.25
        exact = 2.0 * math.exp(0.5)
        assert abs(float(out[0]) - exact) < abs(3.0 - exact) / 5.0

    def test_exactly_two_evaluations(self):
        f = CountingVelocity(AnalyticField.linear_decay().velocity)
        rf2_step(Z2, f, 1.0, 0.5)
        assert f.calls == 2


class TestIntegrate:
    def test_zero_field_identity(self):
        out = integrate(Z2, AnalyticField.zero().velocity, make_schedule(13, SAMPLE, EULER))
        assert np.array_equal(out, Z2)

    @pytest.mark.parametrize("order", [EULER, RF2])
    @pytest.mark.parametrize("direction,target", [(SAMPLE, -1.0), (INVERT, 1.0)])
    def test_exact_on_constant_fields(self, order, direction, target):
        f = AnalyticField.constant(1.0)
        out = integrate(Z2, f.velocity, make_schedule(9, direction, order))
        assert np.allclose(out, [2.0 + target], atol=1e-6)

    def test_evaluation_count_accounting(self):
        for order, per_step in ((EULER, 1), (RF2, 2)):
            f = CountingVelocity(AnalyticField.linear_decay().velocity)
            integrate(Z2, f, make_schedule(17, SAMPLE, order))
            assert f.calls == 17 * per_step

    def test_deterministic(self):
        f = AnalyticField.linear_decay()
        s = make_schedule(20, SAMPLE, RF2)
        assert integrate(Z2, f.velocity, s).tobytes() == integrate(Z2, f.velocity, s).tobytes()

    def test_failing_step_index_reported(self):
        calls = [0]

        def flaky(z, t):
            calls[0] += 1
            if calls[0] > 3:
                return np.full_like(z, np.inf)
            return np.zeros_like(z)

        with pytest.raises(NumericError, match="step 3"):
            integrate(Z2, flaky, make_schedule(10, SAMPLE, EULER))

    def test_linear_decay_roundtrip_golden(self):
        f = AnalyticField.linear_decay()
        noise = integrate(Z2, f.velocity, make_schedule(50, SAMPLE, RF2))
        back = integrate(noise, f.velocity, make_schedule(50, INVERT, RF2))
        err = rel_l2(Z2, back)
        assert err < 1e-4
        assert err <= LINDECAY_RF2_ROUNDTRIP_BOUND

    def test_order_of_accuracy_on_linear_decay(self):
        f = AnalyticField.linear_decay()
        z0 = np.array([2.0], dtype=np.float32)
        exact = f.exact(z0, 1.0, 0.0)
        slopes = {}
        for order in (EULER, RF2):
            errs = [
                rel_l2(exact, integrate(z0, f.velocity, make_schedule(n, SAMPLE, order)))
                for n in (8, 16, 32, 64)
            ]
            slopes[order] = convergence_order([8, 16, 32, 64], errs)
        assert 0.8 <= slopes[EULER] <= 1.2
        assert 1.7 <= slopes[RF2] <= 2.3

    @given(n=st.integers(2, 40))
    @settings(max_examples=20, deadline=None)
    def test_roundtrip_contraction_on_linear_decay(self, n):
        f = AnalyticField.linear_decay()
        errs = {}
        for order in (EULER, RF2):
            noise = integrate(Z2, f.velocity, make_schedule(n, SAMPLE, order))
            back = integrate(noise, f.velocity, make_schedule(n, INVERT, order))
            errs[order] = rel_l2(Z2, back)
        assert errs[RF2] <= errs[EULER]


class TestCfgVelocity:
    def test_scale_one_is_conditioned(self):
        vc = np.array([1.0, 2.0], dtype=np.float32)
        vu = np.array([0.0, 1.0], dtype=np.float32)
        assert np.array_equal(cfg_velocity(vc, vu, 1.0), vc)

    def test_scale_zero_is_unconditioned(self):
        vc = np.array([1.0, 2.0], dtype=np.float32)
        vu = np.array([0.0, 1.0], dtype=np.float32)
        assert np.array_equal(cfg_velocity(vc, vu, 0.0), vu)

    def test_direct_arithmetic(self):
        out = cfg_velocity(np.array([1.0], dtype=np.float32), np.array([0.0], dtype=np.float32), 3.0)
        assert np.array_equal(out, np.array([3.0], dtype=np.float32))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            cfg_velocity(np.zeros(2), np.zeros(3), 1.0)
