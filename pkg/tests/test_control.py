from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import point_in_polygon
from stringnet.control import DefenderGains, attacker_control, attacker_controls, defender_control, \
    defender_controls, segment_distances, string_constraint_force, string_constraint_forces
from stringnet.core import AgentState, AttackerPolicyConfig
from stringnet.dynamics import step_arrays
from stringnet.engine import enforce_barriers
from stringnet.formation import enclose_closed_goals

GAINS = DefenderGains(k_p=4, k_v=4, c_d=0.5, u_max=3.0)


class TestDefenderControl:
    def test_equilibrium_is_drag_feed_forward(self):
        v = np.array([0.4, -0.3])
        u = defender_control(AgentState((1, 1), v), (1, 1), v, GAINS)
        assert np.allclose(u, 0.5 * np.hypot(*v) * v, atol=1e-15)

    def test_points_at_goal(self):
        u = defender_control(AgentState((2.5, 0), (0, 0)), (0, 0), (0, 0), GAINS)
        assert u[0] < 0 and u[1] == 0

    @given(st.integers(0, 2**32 - 1))
    def test_saturated(self, seed):
        rng = np.random.default_rng(seed)
        n = 6
        u = defender_controls(rng.normal(0, 5, (n, 2)), rng.normal(0, 2, (n, 2)), rng.normal(0, 50, (n, 2)),
                              rng.normal(0, 2, (n, 2)), GAINS, others=rng.normal(0, 5, (n, 2)),
                              other_groups=[(rng.normal(0, 5, 2), 2.0)])
        assert np.hypot(*u.T).max() <= 3.0 * (1 + 1e-12)

    def test_spacing_pushes_apart(self):
        gains = DefenderGains(k_p=0, k_v=0, c_d=0, u_max=3.0, min_gap=0.5)
        u = defender_controls(np.array([[0.0, 0.0]]), np.zeros((1, 2)), np.zeros((1, 2)), np.zeros((1, 2)),
                              gains, others=np.array([[0.2, 0.0]]))
        assert u[0, 0] < 0 and u[0, 1] == 0

    def test_string_partner_pull(self):
        gains = DefenderGains(k_p=0, k_v=0, c_d=0, u_max=3.0, string_max=2.0)
        u = defender_controls(np.array([[0.0, 0.0]]), np.zeros((1, 2)), np.zeros((1, 2)), np.zeros((1, 2)),
                              gains, partners=(np.array([0]), np.array([[1.95, 0.0]])))
        assert u[0, 0] > 0
        slack = defender_controls(np.array([[0.0, 0.0]]), np.zeros((1, 2)), np.zeros((1, 2)),
                                  np.zeros((1, 2)), gains, partners=(np.array([0]), np.array([[1.0, 0.0]])))
        assert np.array_equal(slack, np.zeros((1, 2)))

    def test_group_repulsion(self):
        gains = DefenderGains(k_p=0, k_v=0, c_d=0, u_max=3.0, group_margin=1.0)
        r = np.array([[0.0, 1.0], [0.0, -1.0]])
        u = defender_controls(r, np.zeros((2, 2)), r, np.zeros((2, 2)), gains, other_groups=[((-2.5, 0.0), 1.0)])
        assert (u[:, 0] > 0).all()


class TestStringForce:
    def test_far(self):
        assert np.array_equal(string_constraint_force((0, 5), [((-1, 0), (1, 0))], 0.3, 0.1, 1.0), [0, 0])

    def test_normal_direction(self):
        f = string_constraint_force((0, 0.15), [((-1, 0), (1, 0))], 0.3, 0.1, 1.0)
        assert f[0] == 0 and f[1] > 0
        assert f[1] == pytest.approx(0.75)

    def test_contact_magnitude(self):
        f = string_constraint_force((0.3, -0.1), [((-1, 0), (1, 0))], 0.3, 0.1, 1.0)
        assert np.allclose(f, (0, -1.0))

    def test_nearest_edge(self):
        edges = np.array([((-1, 0), (1, 0)), ((2, -1), (2, 1))], float)
        f = string_constraint_forces(np.array([[1.8, 0.5]]), edges[:, 0], edges[:, 1], 0.3, 0.1, 1.0)
        assert f[0, 0] < 0 and f[0, 1] == 0

    def test_segment_distances(self):
        d, c, t = segment_distances(np.array([[0.0, 1.0], [3.0, 0.0]]), np.array([[-1.0, 0.0]]),
                                    np.array([[1.0, 0.0]]))
        assert np.allclose(d[:, 0], [1.0, 2.0])
        assert np.allclose(c[1, 0], (1, 0)) and t[1, 0] == 1.0


class TestAttackerControl:
    policy = AttackerPolicyConfig()

    def test_goal_only(self):
        u = attacker_control(AgentState((10, 5), (0, 0)), [], self.policy, (0, 0), 1.0, 0.5, 2.0)
        assert np.hypot(*u) == pytest.approx(1.0)
        assert np.allclose(u / np.hypot(*u), -np.array([10, 5]) / math.hypot(10, 5))

    def test_dead_ahead_defender_deflects(self):
        u = attacker_control(AgentState((10, 0), (0, 0)), [(9, 0)], self.policy, (0, 0), 1.0, 0.5, 2.0)
        assert abs(u[1]) > 1e-3

    def test_out_of_range_defender_ignored(self):
        a = attacker_control(AgentState((10, 0), (0, 0)), [(5, 0)], self.policy, (0, 0), 1.0, 0.5, 2.0)
        b = attacker_control(AgentState((10, 0), (0, 0)), [], self.policy, (0, 0), 1.0, 0.5, 2.0)
        assert np.array_equal(a, b)

    def test_split_on_block_diverges(self):
        pol = AttackerPolicyConfig(kind="SplitOnBlock", defender_repulsion=0.0, avoid_tangential=0.0,
                                   cohesion=0.0, alignment=0.0, separation=0.0)
        r = np.array([[10.0, 0.5], [10.0, -0.5]])
        u = attacker_controls(r, np.zeros((2, 2)), np.zeros((2, 2)), pol, 1.0, 0.5,
                              defenders=np.array([[8.5, 0.0]]), sense_radius=3.0)
        assert u[0, 1] > 0 > u[1, 1]

    @given(st.integers(0, 2**32 - 1))
    def test_saturated(self, seed):
        rng = np.random.default_rng(seed)
        r = rng.normal(0, 3, (8, 2))
        u = attacker_controls(r, rng.normal(0, 1, (8, 2)), rng.normal(0, 10, (8, 2)), self.policy, 1.0, 0.5,
                              defenders=rng.normal(0, 3, (5, 2)), sense_radius=2.0,
                              labels=rng.integers(0, 2, 8), string_force=rng.normal(0, 2, (8, 2)))
        assert np.hypot(*u.T).max() <= 1.0 * (1 + 1e-12)


def enclosed_run(n_attackers: int, n_steps: int, seed: int = 0):
    """Attackers chasing random targets inside a static closed net of radius 3."""
    rho_sn, n = 3.0, 8
    net = enclose_closed_goals((0, 0), 0.0, n, rho_sn)
    a, b = net, np.roll(net, -1, axis=0)
    edges = np.array([(k, (k + 1) % n) for k in range(n)])
    rng = np.random.default_rng(seed)
    policy = AttackerPolicyConfig()
    r = rng.uniform(-1, 1, (n_attackers, 2))
    v = np.zeros_like(r)
    still = np.zeros((n, 2))
    max_radius, outside, crossings = 0.0, 0, 0
    for k in range(n_steps):
        if k % 300 == 0:
            targets = rng.uniform(-20, 20, (n_attackers, 2))
        sf = string_constraint_forces(r, a, b, 0.3, 0.1, 1.0)
        u = attacker_controls(r, v, targets, policy, 1.0, 0.5, labels=np.arange(n_attackers), string_force=sf)
        r1, v1 = step_arrays(r, v, u, 0.01, 0.5, math.sqrt(2))
        enforce_barriers(r, r1, v1, net, net, still, edges, [list(range(n))])
        # independent crossing count: the straight move must not intersect any string
        for i in range(n_attackers):
            for e0, e1 in zip(a, b):
                if _segments_intersect(r[i], r1[i], e0, e1):
                    crossings += 1
        r, v = r1, v1
        max_radius = max(max_radius, float(np.hypot(*r.T).max()))
        outside += sum(not point_in_polygon(p, net) for p in r)
    return max_radius, outside, crossings, rho_sn


def _segments_intersect(p, q, a, b) -> bool:
    def orient(u, v, w):
        return (v[0] - u[0]) * (w[1] - u[1]) - (v[1] - u[1]) * (w[0] - u[0])
    d1, d2 = orient(a, b, p), orient(a, b, q)
    d3, d4 = orient(p, q, a), orient(p, q, b)
    return d1 * d2 < 0 and d3 * d4 < 0


def test_attacker_stays_inside_closed_net():
    max_radius, outside, _, rho_sn = enclosed_run(1, 10_000)
    assert max_radius < rho_sn and outside == 0


def test_no_string_crossings_over_many_steps():
    # 20 attackers x 5000 steps = 1e5 attacker steps
    _, outside, crossings, _ = enclosed_run(20, 5000, seed=1)
    assert crossings == 0 and outside == 0
