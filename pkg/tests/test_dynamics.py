from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import drag_reference
from stringnet.core import AgentState
from stringnet.dynamics import ControlInput, IntegrationError, saturate, saturate_rows, step, step_arrays


class TestSaturate:
    def test_inside_ball(self):
        assert np.array_equal(saturate((3, 4), 10), [3, 4])

    def test_scaled(self):
        assert np.allclose(saturate((6, 8), 5), [3, 4], atol=1e-15)

    def test_zero(self):
        assert np.array_equal(saturate((0, 0), 1), [0, 0])

    @given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(0.01, 100))
    def test_bound_and_direction(self, x, y, b):
        s = saturate((x, y), b)
        assert np.hypot(*s) <= b * (1 + 1e-15)
        assert abs(s[0] * y - s[1] * x) <= 1e-9 * max(1.0, abs(x) + abs(y)) ** 2

    def test_rows_match_single(self):
        rng = np.random.default_rng(0)
        u = rng.normal(0, 3, (50, 2))
        rows = saturate_rows(u, 2.0)
        for a, b in zip(rows, u):
            assert np.allclose(a, saturate(b, 2.0), atol=1e-15)

    def test_control_input_saturates(self):
        assert np.hypot(*ControlInput((30, 40), 5).u) == pytest.approx(5)
        with pytest.raises(ValueError):
            ControlInput((1, 0), 0)


class TestStep:
    def test_equilibrium(self):
        s = AgentState((0, 0), (0, 0))
        out = step(s, ControlInput((0, 0), 1), 0.01, 1.0)
        assert np.array_equal(out.r, s.r) and np.array_equal(out.v, s.v)

    def test_terminal_speed(self):
        s = AgentState((0, 0), (0, 0))
        u = ControlInput((4, 0), 4)
        for _ in range(2000):
            s = step(s, u, 0.01, 1.0)
        assert abs(s.speed - 2.0) < 1e-3
        ref = drag_reference((0, 0), (4, 0), 1.0, 20.0)
        assert np.allclose(s.v, ref, atol=1e-9)

    def test_matches_reference_transient(self):
        s = AgentState((0, 0), (0.3, -0.2))
        u = ControlInput((0.5, 1.0), 2.0)
        for _ in range(150):
            s = step(s, u, 0.01, 0.7)
        ref = drag_reference((0.3, -0.2), (0.5, 1.0), 0.7, 1.5, steps=15000)
        assert np.allclose(s.v, ref, atol=1e-9)

    def test_speed_ball_invariant_near_bound(self):
        v_bar = 2.0
        s = AgentState((0, 0), (v_bar - 1e-6, 0))
        out = step(s, ControlInput((4, 0), 4), 0.01, 1.0)
        assert out.speed < v_bar
        ref = drag_reference((v_bar - 1e-6, 0), (4, 0), 1.0, 0.01, steps=1000)
        assert np.hypot(*ref) < v_bar

    def test_zero_drag_limit(self):
        r0, v0, u, dt = np.array([1.0, -2.0]), np.array([0.5, 0.25]), np.array([0.3, -0.4]), 0.05
        out = step(AgentState(r0, v0), ControlInput(u, 1.0), dt, 1e-12)
        assert np.allclose(out.r, r0 + v0 * dt + 0.5 * u * dt * dt, atol=1e-8)
        assert np.allclose(out.v, v0 + u * dt, atol=1e-8)

    def test_random_inputs_respect_bound(self):
        rng = np.random.default_rng(3)
        u_max, c_d = 1.5, 0.5
        v_bar = math.sqrt(u_max / c_d)
        r, v = np.zeros((20, 2)), np.zeros((20, 2))
        for _ in range(500):
            u = saturate_rows(rng.normal(0, 3, (20, 2)), u_max)
            r, v = step_arrays(r, v, u, 0.05, c_d, v_bar)
            assert np.hypot(*v.T).max() < v_bar + 1e-9

    def test_deterministic(self):
        def run():
            rng = np.random.default_rng(11)
            r, v = np.zeros((5, 2)), np.zeros((5, 2))
            for _ in range(200):
                r, v = step_arrays(r, v, saturate_rows(rng.normal(0, 2, (5, 2)), 1.0), 0.01, 0.5, math.sqrt(2))
            return r.tobytes() + v.tobytes()
        assert run() == run()

    def test_bad_dt(self):
        with pytest.raises(ValueError):
            step(AgentState((0, 0), (0, 0)), ControlInput((0, 0), 1), 0.0, 1.0)

    def test_non_finite_detected(self):
        with pytest.raises(IntegrationError):
            step_arrays(np.array([[np.nan, 0.0]]), np.zeros((1, 2)), np.zeros((1, 2)), 0.01, 1.0)
