from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dbscan_reference
from stringnet.clustering import NOISE, Swarm, connectivity_radius, convex_hull, dbscan, dbscan_eps, \
    dbscan_labels, hull_centroid, inscribed_radius, recluster_trigger, weighted_distance

finite = st.floats(-50, 50, allow_nan=False)
state = st.tuples(finite, finite, finite, finite)


class TestWeightedDistance:
    def test_position_only(self):
        assert weighted_distance((0, 0, 0, 0), (3, 4, 0, 0), 0.25) == 5.0

    def test_velocity_only(self):
        assert weighted_distance((0, 0, 0, 0), (0, 0, 3, 4), 0.25) == 2.5

    def test_mixed(self):
        assert weighted_distance((1, 1, 2, 0), (2, 1, 0, 0), 0.5) == pytest.approx(math.sqrt(3), abs=1e-15)

    @given(state, state, state, st.floats(0.01, 0.99))
    def test_metric_axioms(self, a, b, c, phi):
        ab, ba = weighted_distance(a, b, phi), weighted_distance(b, a, phi)
        assert ab == ba and ab >= 0
        assert weighted_distance(a, a, phi) == 0
        assert weighted_distance(a, c, phi) <= ab + weighted_distance(b, c, phi) + 1e-9


class TestEps:
    def test_square(self):
        assert dbscan_eps(2, 4, 3, 3) == pytest.approx(1.0, abs=1e-15)

    def test_hexagon(self):
        assert dbscan_eps(2, 6, 5, 3) == pytest.approx(math.sqrt(3) / 2, abs=1e-15)

    def test_18_defenders(self):
        # 0.75 * cot(pi/18) * 2/17 at 30 digits (mpmath)
        assert dbscan_eps(1.5, 18, 18, 3) == pytest.approx(0.500407219378033193911272215282, abs=1e-14)

    def test_lemma_rule(self):
        # floor(m_pts/2) instead of m_pts - 1: half the body value for m_pts = 3
        assert dbscan_eps(1.5, 18, 18, 3, rule="lemma") == pytest.approx(0.250203609689016596955636107641,
                                                                          abs=1e-14)

    def test_domain(self):
        with pytest.raises(ValueError):
            dbscan_eps(2, 2, 3, 3)
        with pytest.raises(ValueError):
            dbscan_eps(2, 4, 1, 3)
        with pytest.raises(ValueError):
            dbscan_eps(2, 4, 3, 3, rule="other")

    def test_inscribed_radius(self):
        assert inscribed_radius(2, 4) == pytest.approx(1.0)


class TestDbscan:
    def test_three_collinear(self):
        pts = [(0, 0, 0, 0), (0.5, 0, 0, 0), (1, 0, 0, 0)]
        part = dbscan(pts, 0.6, 3, 0.25)
        assert [c.member_indices for c in part.clusters] == [(0, 1, 2)]
        assert part.noise == frozenset()

    def test_far_point_is_noise(self):
        pts = [(0, 0, 0, 0), (0.5, 0, 0, 0), (1, 0, 0, 0), (10, 0, 0, 0)]
        part = dbscan(pts, 0.6, 3, 0.25)
        assert [c.member_indices for c in part.clusters] == [(0, 1, 2)]
        assert part.noise == frozenset({3})

    def test_two_points(self):
        part = dbscan([(0, 0, 0, 0), (0.1, 0, 0, 0)], 5.0, 3, 0.25)
        assert part.clusters == () and part.noise == frozenset({0, 1})

    def test_empty(self):
        assert dbscan(np.zeros((0, 4)), 1.0, 3, 0.25).clusters == ()

    def test_closed_ball(self):
        # neighbours at exactly eps count
        labels = dbscan_labels(np.array([(0, 0, 0, 0), (1, 0, 0, 0), (2, 0, 0, 0)], float), 1.0, 3, 0.25)
        assert labels.tolist() == [0, 0, 0]

    def test_velocity_separates(self):
        pts = [(0, 0, 0, 0), (0.2, 0, 0, 0), (0.4, 0, 0, 0), (0, 0.1, 4, 0), (0.2, 0.1, 4, 0), (0.4, 0.1, 4, 0)]
        part = dbscan(pts, 0.5, 3, 0.25)
        assert [c.member_indices for c in part.clusters] == [(0, 1, 2), (3, 4, 5)]

    def test_indices_and_geometry(self):
        pts = np.array([(5, 5, 0, 0), (5.5, 5, 0, 0), (5, 5.5, 0, 0)], float)
        positions = np.zeros((10, 2))
        positions[[7, 8, 9]] = pts[:, :2]
        part = dbscan(pts, 1.0, 3, 0.25, positions=positions, indices=[7, 8, 9])
        assert part.clusters[0].member_indices == (7, 8, 9)
        assert np.allclose(part.clusters[0].center_of_mass, pts[:, :2].mean(axis=0))
        assert part.labels(10).tolist() == [-1] * 7 + [0, 0, 0]

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10_000), st.integers(1, 30), st.floats(0.2, 3.0), st.integers(2, 5))
    def test_matches_reference(self, seed, n, eps, m_pts):
        rng = np.random.default_rng(seed)
        pts = np.column_stack((rng.uniform(0, 6, (n, 2)), rng.normal(0, 1, (n, 2))))
        labels = dbscan_labels(pts, eps, m_pts, 0.25)
        assert labels.tolist() == dbscan_reference(pts.tolist(), eps, m_pts, 0.25)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10_000), st.integers(1, 30), st.floats(0.2, 2.0))
    def test_partition_and_chain_bound(self, seed, n, eps):
        rng = np.random.default_rng(seed)
        pts = np.column_stack((rng.uniform(0, 8, (n, 2)), rng.normal(0, 0.5, (n, 2))))
        part = dbscan(pts, eps, 3, 0.25)
        members = [i for c in part.clusters for i in c.member_indices]
        assert len(members) == len(set(members))
        assert set(members) | set(part.noise) == set(range(n))
        assert not set(members) & set(part.noise)
        w = np.array([1, 1, 0.5, 0.5])
        for c in part.clusters:
            assert c.size >= 3
            x = pts[list(c.member_indices)] * w
            diam = max(float(np.sqrt(((a - b) ** 2).sum())) for a in x for b in x)
            assert diam <= eps * (c.size - 1) + 1e-9


class TestSwarmGeometry:
    def test_square(self):
        pts = np.array([(0, 0), (2, 0), (2, 2), (0, 2), (0.1, 0.1)], float)
        s = Swarm.from_positions(range(5), pts)
        assert np.allclose(s.hull_center, (1, 1))
        assert s.radius == pytest.approx(math.hypot(1, 1))
        assert np.allclose(s.center_of_mass, pts.mean(axis=0))

    def test_hull(self):
        pts = np.array([(0, 0), (1, 0), (1, 1), (0, 1), (0.5, 0.5), (0.5, 0)], float)
        hull = convex_hull(pts)
        assert len(hull) == 4
        assert np.allclose(hull_centroid(pts), (0.5, 0.5))

    def test_degenerate(self):
        assert np.allclose(hull_centroid(np.array([(0, 0), (2, 0), (1, 0)], float)), (1, 0))
        assert np.allclose(hull_centroid(np.array([(3, 4)], float)), (3, 4))

    @given(st.integers(0, 1000), st.floats(-100, 100), st.floats(-100, 100))
    def test_translation(self, seed, dx, dy):
        pts = np.random.default_rng(seed).uniform(-5, 5, (8, 2))
        a = Swarm.from_positions(range(8), pts)
        b = Swarm.from_positions(range(8), pts + (dx, dy))
        assert np.allclose(b.hull_center, a.hull_center + (dx, dy), atol=1e-9)
        assert b.radius == pytest.approx(a.radius, abs=1e-9)


def _swarm(radius: float, size: int = 3) -> Swarm:
    return Swarm(tuple(range(size)), np.zeros(2), np.zeros(2), radius)


class TestReclusterTrigger:
    def test_below(self):
        assert not recluster_trigger(_swarm(0.5), 2, 4, 4)

    def test_above(self):
        assert recluster_trigger(_swarm(0.7), 2, 4, 4)

    def test_boundary_is_strict(self):
        rho_bar = inscribed_radius(2, 6)
        assert not recluster_trigger(_swarm(rho_bar, 6), 2, 6, 6)
        assert recluster_trigger(_swarm(rho_bar * (1 + 1e-12), 6), 2, 6, 6)

    def test_threshold_value(self):
        assert connectivity_radius(2, 4, 4, 3) == pytest.approx(2 / 3)
        assert NOISE == -1
