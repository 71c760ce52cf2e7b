"""Swarm identification with DBSCAN over a weighted position/velocity metric.

Each attacker is a state point ``x = (r_x, r_y, v_x, v_y)`` and two points are
compared with ``d = sqrt((x1 - x2)^T M (x1 - x2))``, ``M = diag(1, 1, phi, phi)``.
The neighbourhood radius is derived from the largest circle that fits inside
the biggest closed net the defenders can form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import Vec2, vec2

NOISE = -1


def weighted_distance(x1, x2, phi: float) -> float:
    d = np.asarray(x1, float) - np.asarray(x2, float)
    return math.sqrt(d[0] ** 2 + d[1] ** 2 + phi * (d[2] ** 2 + d[3] ** 2))


def inscribed_radius(r_s_max: float, n_d: int) -> float:
    """Radius of the circle inscribed in a regular closed net of ``n_d`` strings of length ``r_s_max``."""
    if n_d < 3:
        raise ValueError("a closed net needs at least 3 defenders")
    return 0.5 * r_s_max / math.tan(math.pi / n_d)


def dbscan_eps(r_s_max: float, n_d: int, n_a: int, m_pts: int = 3, rule: str = "body") -> float:
    """Neighbourhood radius eps_nb.

    ``rule="body"`` gives ``rho_bar * (m_pts - 1) / (n_a - 1)``; ``rule="lemma"``
    gives the alternative ``rho_bar * floor(m_pts / 2) / (n_a - 1)``.
    """
    if n_a < 2 or m_pts < 2:
        raise ValueError("dbscan_eps needs n_a >= 2 and m_pts >= 2")
    rho_bar = inscribed_radius(r_s_max, n_d)
    if rule == "body":
        return rho_bar * (m_pts - 1) / (n_a - 1)
    if rule == "lemma":
        return rho_bar * (m_pts // 2) / (n_a - 1)
    raise ValueError(f"unknown eps rule {rule!r}")


def connectivity_radius(r_s_max: float, n_d: int, n_a: int, size: int) -> float:
    """Largest admissible radius of a swarm of ``size`` attackers."""
    return inscribed_radius(r_s_max, n_d) * (size - 1) / (n_a - 1)


# ---------------------------------------------------------------------------
# Swarm geometry
# ---------------------------------------------------------------------------


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Counter-clockwise hull vertices (monotone chain); collinear points dropped."""
    pts = np.unique(np.asarray(points, float), axis=0)
    if len(pts) <= 2:
        return pts
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def hull_centroid(points: np.ndarray) -> Vec2:
    """Area centroid of the convex hull; degenerate hulls fall back to their vertex mean."""
    hull = convex_hull(points)
    if len(hull) < 3:
        return hull.mean(axis=0)
    ref = hull[0]
    p = hull - ref
    x, y = p[:, 0], p[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    c = x * yn - xn * y
    area2 = c.sum()
    if abs(area2) < 1e-12:
        return hull.mean(axis=0)
    cx = ((x + xn) * c).sum() / (3.0 * area2)
    cy = ((y + yn) * c).sum() / (3.0 * area2)
    return ref + np.array([cx, cy])


@dataclass(frozen=True)
class Swarm:
    member_indices: tuple[int, ...]
    center_of_mass: Vec2
    hull_center: Vec2
    radius: float

    @classmethod
    def from_positions(cls, members, positions: np.ndarray) -> Swarm:
        """Geometry of the swarm ``members`` given all attacker positions."""
        idx = tuple(sorted(int(i) for i in members))
        pts = np.asarray(positions, float)[list(idx)]
        com = pts.mean(axis=0)
        # hull centroid taken relative to the centre of mass, as in the definition
        center = com + hull_centroid(pts - com)
        radius = float(np.max(np.hypot(*(pts - center).T))) if len(pts) else 0.0
        return cls(idx, vec2(com), vec2(center), radius)

    @property
    def size(self) -> int:
        return len(self.member_indices)


@dataclass(frozen=True)
class SwarmPartition:
    clusters: tuple[Swarm, ...]
    noise: frozenset[int] = field(default_factory=frozenset)

    def labels(self, n: int) -> np.ndarray:
        out = np.full(n, NOISE, dtype=int)
        for k, s in enumerate(self.clusters):
            out[list(s.member_indices)] = k
        return out


# ---------------------------------------------------------------------------
# DBSCAN
# ---------------------------------------------------------------------------


def dbscan_labels(points: np.ndarray, eps: float, m_pts: int, phi: float) -> np.ndarray:
    """Cluster labels (``NOISE`` = -1) for an ``(n, 4)`` array of state points.

    Neighbourhoods are closed balls that include the query point.  Points are
    scanned in index order and cluster ids are issued in discovery order, so a
    border point reachable from two clusters joins the one found first.
    """
    if not eps > 0 or m_pts < 2:
        raise ValueError("dbscan needs eps > 0 and m_pts >= 2")
    x = np.asarray(points, float).reshape(-1, 4)
    n = len(x)
    labels = np.full(n, NOISE, dtype=int)
    if n == 0:
        return labels
    w = np.array([1.0, 1.0, math.sqrt(phi), math.sqrt(phi)])
    xs = x * w
    d2 = ((xs[:, None, :] - xs[None, :, :]) ** 2).sum(axis=2)
    nbrs = [np.flatnonzero(row <= eps * eps) for row in d2]
    core = np.array([len(nb) >= m_pts for nb in nbrs])
    visited = np.zeros(n, dtype=bool)
    cid = 0
    for i in range(n):
        if visited[i] or not core[i]:
            continue
        visited[i] = True
        labels[i] = cid
        queue = list(nbrs[i])
        while queue:
            j = queue.pop(0)
            if labels[j] == NOISE:
                labels[j] = cid
            if visited[j] or not core[j]:
                continue
            visited[j] = True
            queue.extend(nbrs[j])
        cid += 1
    return labels


def dbscan(points, eps: float, m_pts: int, phi: float, positions=None, indices=None) -> SwarmPartition:
    """Partition state points into swarms and noise.

    ``indices`` maps rows of ``points`` to attacker ids (defaults to ``range(n)``);
    ``positions`` is the full attacker position array used for swarm geometry
    (defaults to the first two columns of ``points``).
    """
    x = np.asarray(points, float).reshape(-1, 4)
    ids = np.arange(len(x)) if indices is None else np.asarray(indices, dtype=int)
    labels = dbscan_labels(x, eps, m_pts, phi)
    if positions is None:
        positions = np.zeros((int(ids.max()) + 1 if len(ids) else 0, 2))
        positions[ids] = x[:, :2]
    clusters = []
    for k in range(labels.max() + 1 if len(labels) else 0):
        clusters.append(Swarm.from_positions(ids[labels == k], positions))
    noise = frozenset(int(i) for i in ids[labels == NOISE])
    return SwarmPartition(tuple(clusters), noise)


def recluster_trigger(swarm: Swarm, r_s_max: float, n_d: int, n_a: int) -> bool:
    """True when the swarm has outgrown its size-scaled connectivity radius."""
    return swarm.radius > connectivity_radius(r_s_max, n_d, n_a, swarm.size)
