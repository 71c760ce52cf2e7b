"""Defender-to-swarm assignment.

The connectivity-constrained assignment asks for a 0/1 matrix ``delta[j, k]``
(defender ``j`` herds swarm ``k``) minimising ``sum ||c_k - r_j|| delta[j, k]``
where every defender gets one swarm, swarm ``k`` gets exactly ``capacity[k]``
defenders, and those defenders are consecutive along the open net.

Contiguity plus full coverage means every feasible matrix is a split of the
defender path into consecutive blocks, one per swarm, in some swarm order.
The feasible set is therefore exactly the ``N_ac!`` block orderings.
:func:`solve_exact` searches those orderings depth-first with two prunes: an
admissible lower bound (each unplaced defender at its nearest unplaced swarm)
and prefix dominance (two prefixes that placed the same swarms end at the same
path position, so only the cheaper one can lead to the optimum).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .core import ScenarioConfig, unit, vec2
from .formation import gather_goals


class InfeasibleAssignment(ValueError):
    pass


@dataclass(frozen=True)
class C2GAPInstance:
    defender_positions: np.ndarray  # (n_d, 2), rows in open-net path order
    swarm_centers: np.ndarray  # (n_ac, 2)
    capacities: tuple[int, ...]

    def __post_init__(self) -> None:
        d = np.asarray(self.defender_positions, float).reshape(-1, 2)
        c = np.asarray(self.swarm_centers, float).reshape(-1, 2)
        caps = tuple(int(x) for x in self.capacities)
        if len(caps) != len(c):
            raise ValueError("one capacity per swarm is required")
        if any(x < 1 for x in caps):
            raise ValueError("capacities must be positive")
        object.__setattr__(self, "defender_positions", d)
        object.__setattr__(self, "swarm_centers", c)
        object.__setattr__(self, "capacities", caps)

    @property
    def n_defenders(self) -> int:
        return len(self.defender_positions)

    @property
    def n_swarms(self) -> int:
        return len(self.swarm_centers)

    def distances(self) -> np.ndarray:
        """``(n_ac, n_d)`` matrix of swarm-centre to defender distances."""
        diff = self.swarm_centers[:, None, :] - self.defender_positions[None, :, :]
        return np.hypot(diff[..., 0], diff[..., 1])


@dataclass(frozen=True)
class AssignmentMatrix:
    delta: np.ndarray  # (n_d, n_ac) of 0/1
    block_map: tuple[tuple[int, ...], ...]  # defenders of swarm k in path order

    @classmethod
    def from_blocks(cls, blocks, n_d: int) -> AssignmentMatrix:
        blocks = tuple(tuple(int(j) for j in b) for b in blocks)
        delta = np.zeros((n_d, len(blocks)), dtype=int)
        for k, b in enumerate(blocks):
            delta[list(b), k] = 1
        return cls(delta, blocks)

    @classmethod
    def from_ordering(cls, order, capacities, n_d: int) -> AssignmentMatrix:
        blocks: list[tuple[int, ...]] = [()] * len(capacities)
        start = 0
        for k in order:
            blocks[k] = tuple(range(start, start + capacities[k]))
            start += capacities[k]
        return cls.from_blocks(blocks, n_d)

    def swarm_order(self) -> tuple[int, ...]:
        """Swarms listed by the path position of their first defender."""
        return tuple(sorted(range(len(self.block_map)), key=lambda k: min(self.block_map[k])))


def feasibility_violations(inst: C2GAPInstance, a: AssignmentMatrix) -> list[str]:
    d = np.asarray(a.delta)
    bad = []
    if d.shape != (inst.n_defenders, inst.n_swarms):
        return [f"delta has shape {d.shape}, expected {(inst.n_defenders, inst.n_swarms)}"]
    if not np.isin(d, (0, 1)).all():
        bad.append("delta is not binary")
    if not (d.sum(axis=1) == 1).all():
        bad.append("a defender is not assigned to exactly one swarm")
    if d.sum() != inst.n_defenders:
        bad.append("not every defender is assigned")
    for k, cap in enumerate(inst.capacities):
        col = d[:, k]
        if col.sum() != cap:
            bad.append(f"swarm {k} gets {col.sum()} defenders, capacity is {cap}")
        # consecutive run <=> sum_j delta_jk delta_(j+1)k >= cap - 1
        if int((col[:-1] * col[1:]).sum()) < cap - 1:
            bad.append(f"defenders of swarm {k} are not contiguous")
        if tuple(np.flatnonzero(col)) != tuple(a.block_map[k]):
            bad.append(f"block map of swarm {k} disagrees with delta")
    return bad


def assignment_cost(inst: C2GAPInstance, a: AssignmentMatrix) -> float:
    bad = feasibility_violations(inst, a)
    if bad:
        raise ValueError("infeasible assignment: " + "; ".join(bad))
    return float((inst.distances().T * a.delta).sum())


def ordering_cost(inst: C2GAPInstance, order) -> float:
    dist = inst.distances()
    cost, start = 0.0, 0
    for k in order:
        cap = inst.capacities[k]
        cost += float(dist[k, start:start + cap].sum())
        start += cap
    return cost


def _check_sizes(inst: C2GAPInstance) -> None:
    if inst.n_swarms < 1:
        raise InfeasibleAssignment("no swarms to assign")
    if sum(inst.capacities) != inst.n_defenders:
        raise InfeasibleAssignment(
            f"capacities sum to {sum(inst.capacities)} but there are {inst.n_defenders} defenders")


def solve_exact(inst: C2GAPInstance) -> AssignmentMatrix:
    """Optimal assignment; equal costs resolve to the lexicographically smallest swarm ordering."""
    _check_sizes(inst)
    n, caps = inst.n_swarms, inst.capacities
    dist = inst.distances()
    cum = np.concatenate([np.zeros((n, 1)), np.cumsum(dist, axis=1)], axis=1)
    tol = 1e-12 * max(1.0, float(dist.sum()))

    best_cost = math.inf
    best_order: tuple[int, ...] = ()
    seen: dict[int, float] = {}  # placed-set bitmask -> cheapest prefix cost so far
    order: list[int] = []

    def dfs(mask: int, start: int, cost: float) -> None:
        nonlocal best_cost, best_order
        if mask == (1 << n) - 1:
            if cost < best_cost - tol:
                best_cost, best_order = cost, tuple(order)
            return
        prev = seen.get(mask)
        if prev is not None and cost >= prev - tol:
            return
        seen[mask] = cost
        rest = [k for k in range(n) if not mask >> k & 1]
        if len(rest) > 1:
            bound = float(dist[rest, start:].min(axis=0).sum())
            if cost + bound >= best_cost - tol:
                return
        for k in rest:
            end = start + caps[k]
            order.append(k)
            dfs(mask | 1 << k, end, cost + float(cum[k, end] - cum[k, start]))
            order.pop()

    dfs(0, 0, 0.0)
    return AssignmentMatrix.from_ordering(best_order, caps, inst.n_defenders)


# ---------------------------------------------------------------------------
# Hierarchical divide and conquer
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AttackerSummary:
    centers: np.ndarray  # (n_ac, 2) swarm centres
    sizes: tuple[int, ...]
    ids: tuple[int, ...] | None = None  # original swarm indices, defaults to 0..n_ac-1

    def __post_init__(self) -> None:
        c = np.asarray(self.centers, float).reshape(-1, 2)
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
        ids = tuple(range(len(c))) if self.ids is None else tuple(int(i) for i in self.ids)
        object.__setattr__(self, "ids", ids)
        if not len(c) == len(self.sizes) == len(self.ids):
            raise ValueError("centers, sizes and ids must have equal length")

    @property
    def n_swarms(self) -> int:
        return len(self.sizes)

    @property
    def n_attackers(self) -> int:
        return sum(self.sizes)

    def subset(self, rows) -> AttackerSummary:
        rows = list(rows)
        return AttackerSummary(self.centers[rows], [self.sizes[i] for i in rows], [self.ids[i] for i in rows])


@dataclass(frozen=True)
class DefenderSummary:
    positions: np.ndarray  # (n, 2) in open-net path order
    ids: tuple[int, ...] | None = None  # path positions in the root problem

    def __post_init__(self) -> None:
        p = np.asarray(self.positions, float).reshape(-1, 2)
        object.__setattr__(self, "positions", p)
        ids = tuple(range(len(p))) if self.ids is None else tuple(int(i) for i in self.ids)
        object.__setattr__(self, "ids", ids)

    def slice(self, lo: int, hi: int) -> DefenderSummary:
        return DefenderSummary(self.positions[lo:hi], self.ids[lo:hi])


def _signed_angle(ref: np.ndarray, w: np.ndarray) -> np.ndarray:
    cross = ref[0] * w[:, 1] - ref[1] * w[:, 0]
    dot = w @ ref
    return np.arctan2(cross, dot)


def split_equal(att: AttackerSummary, dfd: DefenderSummary):
    """Split swarms into a left and right half of roughly equal attacker count.

    Swarms are ranked by the signed angle of ``center - r_dc`` against the mean
    of those vectors (``r_dc`` = defender centroid), most counter-clockwise
    first, and accumulated until they hold at least ``ceil(N_a / 2)`` attackers.
    The left swarms take the block of defenders at the left end of the path.

    Returns ``(att_left, dfd_left, att_right, dfd_right)``.
    """
    if att.n_swarms < 2:
        raise ValueError("split_equal needs at least two swarms")
    r_dc = dfd.positions.mean(axis=0)
    w = att.centers - r_dc
    ref = w.mean(axis=0)
    if np.hypot(*ref) < 1e-12:
        ref = np.array([1.0, 0.0])
    psi = _signed_angle(ref, w)
    ranked = sorted(range(att.n_swarms), key=lambda k: (-psi[k], k))
    half = math.ceil(att.n_attackers / 2)
    left: list[int] = []
    total = 0
    for k in ranked[:-1]:  # the right side keeps at least one swarm
        left.append(k)
        total += att.sizes[k]
        if total >= half:
            break
    right = [k for k in ranked if k not in left]
    n_left = sum(att.sizes[k] for k in left)
    # path orientation: is the first defender on the left (counter-clockwise) side of ref?
    left_normal = np.array([-ref[1], ref[0]])
    head_on_left = float((dfd.positions[0] - dfd.positions[-1]) @ left_normal) >= 0.0
    n = len(dfd.positions)
    if head_on_left:
        d_left, d_right = dfd.slice(0, n_left), dfd.slice(n_left, n)
    else:
        d_left, d_right = dfd.slice(n - n_left, n), dfd.slice(0, n - n_left)
    return att.subset(left), d_left, att.subset(right), d_right


def _hierarchical_blocks(att: AttackerSummary, dfd: DefenderSummary, n_leaf: int) -> dict[int, tuple[int, ...]]:
    if att.n_swarms <= n_leaf:
        inst = C2GAPInstance(dfd.positions, att.centers, att.sizes)
        sol = solve_exact(inst)
        return {att.ids[k]: tuple(dfd.ids[j] for j in sol.block_map[k]) for k in range(att.n_swarms)}
    a_l, d_l, a_r, d_r = split_equal(att, dfd)
    out = _hierarchical_blocks(a_l, d_l, n_leaf)
    out.update(_hierarchical_blocks(a_r, d_r, n_leaf))
    return out


def solve_hierarchical(att: AttackerSummary, dfd: DefenderSummary, n_leaf: int = 4) -> AssignmentMatrix:
    """Recursive split into sub-problems of at most ``n_leaf`` swarms, each solved exactly."""
    if n_leaf < 1:
        raise ValueError("n_leaf must be at least 1")
    if att.n_attackers != len(dfd.positions):
        raise InfeasibleAssignment(
            f"capacities sum to {att.n_attackers} but there are {len(dfd.positions)} defenders")
    blocks = _hierarchical_blocks(att, dfd, n_leaf)
    ordered = [blocks[i] for i in sorted(blocks)]
    return AssignmentMatrix.from_blocks(ordered, len(dfd.positions))


# ---------------------------------------------------------------------------
# Gathering: defender-to-goal assignment and gathering centre
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GoalAssignment:
    beta: tuple[int, ...]  # beta[l] = defender sent to goal l
    makespan: float


def gather_goal_assignment(defender_positions, goals, v_max: float = 1.0) -> GoalAssignment:
    """Bottleneck assignment of defenders to goals on straight-line, full-speed travel times.

    Among the assignments that achieve the smallest makespan, the one with the
    least total travel time is returned.
    """
    d = np.asarray(defender_positions, float).reshape(-1, 2)
    g = np.asarray(goals, float).reshape(-1, 2)
    if len(d) != len(g):
        raise ValueError(f"{len(d)} defenders but {len(g)} goals")
    n = len(d)
    if n == 0:
        return GoalAssignment((), 0.0)
    diff = d[:, None, :] - g[None, :, :]
    t = np.hypot(diff[..., 0], diff[..., 1]) / v_max
    levels = np.unique(t)
    lo, hi = 0, len(levels) - 1
    while lo < hi:  # smallest threshold admitting a perfect matching
        mid = (lo + hi) // 2
        match = maximum_bipartite_matching(csr_matrix((t <= levels[mid]).astype(np.int8)), perm_type="column")
        if (match >= 0).all():
            hi = mid
        else:
            lo = mid + 1
    bottleneck = float(levels[lo])
    cost = np.where(t <= bottleneck, t, 1e6 * (1.0 + t.max()))
    rows, cols = linear_sum_assignment(cost)
    beta = [0] * n
    for j, l in zip(rows, cols):
        beta[l] = int(j)
    return GoalAssignment(tuple(beta), bottleneck)


@dataclass(frozen=True)
class GatheringResult:
    center: np.ndarray
    rho: float
    feasible: bool
    assignment: GoalAssignment | None


def gathering_center(cfg: ScenarioConfig, attacker_com, heading: float,
                     defender_positions=None) -> GatheringResult:
    """Farthest gathering centre on the attackers' expected path that the defenders reach first.

    ``heading`` is the angle of the path from the attacker centre of mass to the
    protected area.  Candidate centres sit at distance ``rho`` from the
    protected-area centre, back along that path; ``rho`` is bisected over
    ``(rho_p, |com - r_p|)`` until the bracket is below ``1e-3 * rho_p``.
    """
    r_p = cfg.protected.center
    rho_p = cfg.protected.radius
    d = np.asarray(defender_positions if defender_positions is not None
                   else [s.r for s in cfg.defenders], float)
    com = np.asarray(attacker_com, float)
    theta = heading + math.pi
    spacing = cfg.formation_spacing
    v_a, v_d = cfg.v_a_max, cfg.v_d_max

    def evaluate(rho: float):
        center = r_p + rho * unit(theta)
        goals = gather_goals(center, theta, len(d), spacing)
        ga = gather_goal_assignment(d, goals, v_d)
        t_att = float(np.hypot(*(com - center))) / v_a
        return ga.makespan < t_att, center, ga

    lo, hi = rho_p, float(np.hypot(*(com - r_p)))
    tol = 1e-3 * rho_p
    ok, center, ga = evaluate(lo + 1e-9 * max(1.0, rho_p))
    if hi <= lo or not ok:
        return GatheringResult(vec2(center), lo, False, None)
    best = (lo, center, ga)
    while hi - lo > 0.5 * tol:
        mid = 0.5 * (lo + hi)
        ok, center, ga = evaluate(mid)
        if ok:
            lo, best = mid, (mid, center, ga)
        else:
            hi = mid
    rho, center, ga = best
    return GatheringResult(vec2(center), rho, True, ga)
