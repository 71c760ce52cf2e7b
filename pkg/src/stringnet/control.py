"""Control laws for defenders and attackers, and the string-barrier force.

Defenders use a saturated PD tracker with drag feed-forward,

    u = sat(K_p (xi - r) + K_v (xi_dot - v) + C_D |v| v + extras, u_d_max),

where the extras keep neighbours apart, keep string partners within reach and
push a group away from other groups.  Attackers head for their target at full
thrust, steer around sensed defenders, flock with their own subgroup and are
repelled by nearby strings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import AttackerPolicyConfig
from .dynamics import saturate_rows


def _norm_rows(x: np.ndarray) -> np.ndarray:
    return np.hypot(x[..., 0], x[..., 1])


def _unit_rows(x: np.ndarray) -> np.ndarray:
    n = _norm_rows(x)[..., None]
    return np.divide(x, n, out=np.zeros_like(x), where=n > 1e-12)


def _rot90(x: np.ndarray) -> np.ndarray:
    return np.stack((-x[..., 1], x[..., 0]), axis=-1)


# ---------------------------------------------------------------------------
# Defenders
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DefenderGains:
    k_p: float = 4.0
    k_v: float = 4.0
    c_d: float = 0.5
    u_max: float = 1.0
    min_gap: float = 0.5  # centre distance below which defenders push apart
    k_gap: float = 4.0
    string_max: float = math.inf
    k_string: float = 2.0
    group_margin: float = 0.8  # 2 rho_d + 0.5
    k_group: float = 1.0


def defender_controls(r, v, goals, goal_vel, gains: DefenderGains, *, others=None,
                      partners=None, other_groups=()) -> np.ndarray:
    """Accelerations for a batch of defenders.

    ``others`` are positions of every other defender (for spacing), ``partners``
    an ``(m, 2)`` array of ``(row, partner_position)`` pairs given as
    ``(rows, positions)`` for string partners, and ``other_groups`` a sequence of
    ``(center, radius)`` bounding circles of other groups.
    """
    r = np.atleast_2d(np.asarray(r, float))
    v = np.atleast_2d(np.asarray(v, float))
    u = gains.k_p * (np.asarray(goals, float) - r) + gains.k_v * (np.asarray(goal_vel, float) - v)
    u = u + gains.c_d * _norm_rows(v)[:, None] * v
    if others is not None and len(others):
        diff = r[:, None, :] - np.asarray(others, float)[None, :, :]
        dist = _norm_rows(diff)
        w = np.clip((gains.min_gap - dist) / gains.min_gap, 0.0, None)
        w[dist < 1e-12] = 0.0
        u = u + gains.k_gap * gains.u_max * (w[..., None] * _unit_rows(diff)).sum(axis=1)
    if partners is not None and gains.string_max < math.inf:
        rows, pos = partners
        if len(rows):
            slack = 0.9 * gains.string_max
            diff = np.asarray(pos, float) - r[rows]
            dist = _norm_rows(diff)
            pull = gains.k_string * np.clip(dist - slack, 0.0, None)
            np.add.at(u, rows, pull[:, None] * _unit_rows(diff))
    if len(other_groups):
        c_self = r.mean(axis=0)
        rad_self = float(_norm_rows(r - c_self).max())
        for c_o, rad_o in other_groups:
            away = c_self - np.asarray(c_o, float)
            gap = float(np.hypot(*away)) - rad_self - rad_o
            if gap < gains.group_margin:
                push = gains.k_group * gains.u_max * min(1.0, (gains.group_margin - gap) / gains.group_margin)
                dirn = away / max(float(np.hypot(*away)), 1e-12)
                u = u + push * dirn
    return saturate_rows(u, gains.u_max)


def defender_control(state, goal, goal_velocity, gains: DefenderGains, neighbors=None,
                     other_groups=()) -> np.ndarray:
    """Single-defender form of :func:`defender_controls`."""
    u = defender_controls(np.asarray(state.r)[None], np.asarray(state.v)[None],
                          np.asarray(goal, float)[None], np.asarray(goal_velocity, float)[None],
                          gains, others=neighbors, other_groups=other_groups)
    return u[0]


# ---------------------------------------------------------------------------
# Strings
# ---------------------------------------------------------------------------


def segment_distances(p: np.ndarray, a: np.ndarray, b: np.ndarray):
    """Distances from points ``p`` (n, 2) to segments ``a -> b`` (m, 2).

    Returns ``(dist, closest, t)`` with shapes ``(n, m)``, ``(n, m, 2)``, ``(n, m)``.
    """
    ab = b - a
    len2 = np.maximum((ab ** 2).sum(axis=1), 1e-24)
    ap = p[:, None, :] - a[None, :, :]
    t = np.clip((ap * ab[None]).sum(axis=2) / len2[None], 0.0, 1.0)
    closest = a[None] + t[..., None] * ab[None]
    dist = _norm_rows(p[:, None, :] - closest)
    return dist, closest, t


def string_constraint_forces(p: np.ndarray, a: np.ndarray, b: np.ndarray, d_act: float,
                             contact: float, u_max: float) -> np.ndarray:
    """Repulsion of points ``p`` from the nearest string segment.

    Zero beyond ``d_act``; rises linearly to ``u_max`` at ``contact`` distance and
    points from the closest point of the segment towards the attacker.
    """
    p = np.atleast_2d(np.asarray(p, float))
    out = np.zeros_like(p)
    if len(a) == 0:
        return out
    dist, closest, _ = segment_distances(p, np.asarray(a, float), np.asarray(b, float))
    k = np.argmin(dist, axis=1)
    rows = np.arange(len(p))
    d = dist[rows, k]
    active = d < d_act
    if not np.any(active):
        return out
    mag = u_max * np.clip((d_act - d) / max(d_act - contact, 1e-12), 0.0, 1.0)
    away = p - closest[rows, k]
    dirn = _unit_rows(away)
    # exactly on the segment: fall back to its left normal
    on = active & (d < 1e-12)
    if np.any(on):
        ab = (np.asarray(b, float) - np.asarray(a, float))[k[on]]
        dirn[on] = _unit_rows(_rot90(ab))
    out[active] = (mag[:, None] * dirn)[active]
    return out


def string_constraint_force(r, edges, d_act: float, contact: float, u_max: float) -> np.ndarray:
    """Force on one attacker at ``r`` from string edges given as ``[(a, b), ...]`` endpoint pairs."""
    if len(edges) == 0:
        return np.zeros(2)
    e = np.asarray(edges, float).reshape(-1, 2, 2)
    return string_constraint_forces(np.asarray(r, float)[None], e[:, 0], e[:, 1], d_act, contact, u_max)[0]


# ---------------------------------------------------------------------------
# Attackers
# ---------------------------------------------------------------------------


def attacker_controls(r, v, targets, policy: AttackerPolicyConfig, u_max: float, c_d: float, *,
                      defenders=None, sense_radius: float = 0.0, labels=None,
                      string_force=None) -> np.ndarray:
    """Accelerations for all attackers.

    ``targets`` holds each attacker's current destination.  ``labels`` groups
    attackers into flocks (cohesion and alignment act within a label only);
    separation acts between every pair.  ``string_force`` is the precomputed
    barrier repulsion, added before saturation.
    """
    r = np.atleast_2d(np.asarray(r, float))
    v = np.atleast_2d(np.asarray(v, float))
    n = len(r)
    goal = _unit_rows(np.asarray(targets, float) - r)
    labels = np.zeros(n, dtype=int) if labels is None else np.asarray(labels)

    if policy.kind == "SplitOnBlock" and defenders is not None and len(defenders):
        goal = _diverge_if_blocked(r, goal, np.asarray(defenders, float), sense_radius, policy, labels)

    u = policy.goal_gain * u_max * goal

    if defenders is not None and len(defenders) and sense_radius > 0:
        diff = r[:, None, :] - np.asarray(defenders, float)[None, :, :]
        dist = _norm_rows(diff)
        w = np.where(dist < sense_radius, 1.0 - dist / sense_radius, 0.0)
        e = _unit_rows(diff)
        g = np.broadcast_to(goal[:, None, :], e.shape)
        tang = g - (g * e).sum(axis=2)[..., None] * e
        tn = _norm_rows(tang)
        tang = np.where((tn > 1e-9)[..., None], tang / np.maximum(tn, 1e-12)[..., None], _rot90(g))
        push = policy.defender_repulsion * e + policy.avoid_tangential * tang
        u = u + u_max * (w[..., None] * push).sum(axis=1)

    if n > 1:
        diff = r[:, None, :] - r[None, :, :]
        dist = _norm_rows(diff)
        np.fill_diagonal(dist, np.inf)
        w = np.clip((policy.separation_radius - dist) / policy.separation_radius, 0.0, None)
        u = u + policy.separation * u_max * (w[..., None] * _unit_rows(np.nan_to_num(diff))).sum(axis=1)
        same = labels[:, None] == labels[None, :]
        count = same.sum(axis=1)[:, None]
        com = (same[..., None] * r[None, :, :]).sum(axis=1) / count
        vel = (same[..., None] * v[None, :, :]).sum(axis=1) / count
        u = u + policy.cohesion * (com - r) + policy.alignment * (vel - v)

    if string_force is not None:
        u = u + string_force
    return saturate_rows(u, u_max)


def _diverge_if_blocked(r, goal, defenders, sense_radius, policy, labels):
    """Rotate the goal heading away from the flock axis when a defender blocks the way ahead."""
    diff = defenders[None, :, :] - r[:, None, :]
    dist = _norm_rows(diff)
    cosang = (_unit_rows(diff) * goal[:, None, :]).sum(axis=2)
    blocked = ((dist < sense_radius) & (cosang > math.cos(policy.blockage_cone))).any(axis=1)
    if not np.any(blocked):
        return goal
    out = goal.copy()
    for lab in np.unique(labels):
        idx = np.flatnonzero(labels == lab)
        com = r[idx].mean(axis=0)
        for i in idx:
            if not blocked[i]:
                continue
            g = goal[i]
            side = g[0] * (r[i, 1] - com[1]) - g[1] * (r[i, 0] - com[0])
            ang = policy.divergence_gain * (1.0 if side >= 0 else -1.0)
            c, s = math.cos(ang), math.sin(ang)
            out[i] = (c * g[0] - s * g[1], s * g[0] + c * g[1])
    return out


def attacker_control(state, sensed_defenders, policy: AttackerPolicyConfig, target, u_max: float,
                     c_d: float, sense_radius: float, edges=(), d_act: float = 0.0,
                     contact: float = 0.0) -> np.ndarray:
    """Single-attacker form: goal attraction, defender avoidance and string repulsion."""
    r = np.asarray(state.r, float)
    sensed = np.asarray(sensed_defenders, float).reshape(-1, 2)
    if len(sensed):
        sensed = sensed[np.hypot(*(sensed - r).T) < sense_radius]
    sf = string_constraint_force(r, edges, d_act, contact, u_max)[None] if len(edges) else None
    return attacker_controls(r[None], np.asarray(state.v, float)[None], np.asarray(target, float)[None],
                             policy, u_max, c_d, defenders=sensed, sense_radius=sense_radius,
                             string_force=sf)[0]
