"""Multi-swarm herding simulation.

A :class:`World` advances in fixed ticks.  Each tick:

1. re-cluster any swarm that outgrew its connectivity radius and hand the
   new swarms to the owning defender group (which is split along its open net);
2. advance every group's phase machine
   (gather -> seek -> enclose-open -> enclose-closed -> herd -> done);
3. compute all controls from the pre-tick state, integrate every agent, then
   enforce the strings: attackers cannot cross a string, and no string is ever
   longer than ``r_s_max``.

Everything is deterministic; the same configuration replays bit for bit.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .assignment import AttackerSummary, DefenderSummary, gather_goal_assignment, gathering_center, \
    solve_hierarchical
from .clustering import Swarm, connectivity_radius, dbscan, dbscan_eps, recluster_trigger
from .control import DefenderGains, attacker_controls, defender_controls, segment_distances, \
    string_constraint_forces
from .core import NetKind, ScenarioConfig, StringNetGraph, can_establish, unit, validate_config
from .dynamics import step_arrays
from .formation import closest_safe_area, enclose_closed_goals, enclose_open_goals, gather_goals, \
    max_closed_radius


class Phase(enum.IntEnum):
    GATHER = 0
    SEEK = 1
    ENCLOSE_OPEN = 2
    ENCLOSE_CLOSED = 3
    HERD = 4
    DONE = 5

    @property
    def label(self) -> str:
        return ("Gather", "Seek", "EncloseOpen", "EncloseClosed", "Herd", "Done")[self]


class ConfigError(ValueError):
    pass


class DefenseBreach(RuntimeError):
    pass


@dataclass
class Group:
    gid: int
    members: list[int]  # open-net path order (beta)
    phase: Phase
    swarm_ids: list[int]
    net: StringNetGraph | None = None
    theta: float = 0.0
    rho_sn: float = 0.0
    goals: np.ndarray | None = None
    goal_vel: np.ndarray | None = None
    virtual: np.ndarray | None = None
    safe_index: int | None = None
    closed_at: int | None = None  # tick the closed net was tied


@dataclass
class SwarmTrack:
    sid: int
    members: tuple[int, ...]
    hull_offset: np.ndarray  # hull-centroid minus centre of mass at identification
    identified_at: float


@dataclass
class Event:
    tick: int
    t: float
    kind: str
    data: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"tick": self.tick, "t": round(self.t, 6), "event": self.kind, **self.data}


@dataclass
class Stats:
    breaches: int = 0
    containment_violations: int = 0
    max_closed_stretch: float = 0.0  # longest closed-net edge / r_s_max seen
    max_stretch: float = 0.0  # same over every established edge
    string_projections: int = 0
    crossing_reflections: int = 0
    closed_nets: int = 0
    herd_complete: int = 0
    splits: int = 0
    max_attacker_speed_ratio: float = 0.0
    max_defender_speed_ratio: float = 0.0


_HERD_TAPER = 0.5  # virtual-agent speed ~ taper * distance near the safe area
_SEEK_OFFSET = 0.5  # seek line sits at rho_sn + offset from the swarm centre
_SEEK_TRIGGER = 1.0  # enclosing starts within rho_sn + trigger
_NET_MARGIN = 1.0  # extra room between the swarm and the net


class World:
    def __init__(self, cfg: ScenarioConfig, *, record: bool = True):
        bad = validate_config(cfg)
        if bad:
            raise ConfigError("; ".join(bad))
        self.cfg = cfg
        self.record = record
        self.tick_count = 0
        self.t = 0.0
        self.ra = np.array([a.r for a in cfg.attackers], float)
        self.va = np.array([a.v for a in cfg.attackers], float)
        self.rd = np.array([d.r for d in cfg.defenders], float)
        self.vd = np.array([d.v for d in cfg.defenders], float)
        self.home = self.rd.copy()
        self.v_a_max, self.v_d_max = cfg.v_a_max, cfg.v_d_max
        self.eps_nb = dbscan_eps(cfg.r_s_max, cfg.n_d, cfg.n_a, cfg.m_pts, cfg.eps_rule) if cfg.n_a >= 2 else 1.0
        self.gains = DefenderGains(k_p=cfg.k_p, k_v=cfg.k_v, c_d=cfg.c_d, u_max=cfg.u_d_max,
                                   min_gap=2 * cfg.rho_d + 0.3, string_max=cfg.r_s_max,
                                   group_margin=2 * cfg.rho_d + 0.5)
        self.d_act = 3 * cfg.rho_a
        self.alerted = False
        self.events: list[Event] = []
        self.stats = Stats()
        self.halted: str | None = None
        self._next_gid = 1
        self._next_sid = 1
        self.swarms: dict[int, SwarmTrack] = {}
        self.groups: list[Group] = [Group(0, list(range(cfg.n_d)), Phase.GATHER, [0])]
        self._add_swarm(tuple(range(cfg.n_a)), sid=0)
        # scripted attacker behaviour
        self.flock = np.zeros(cfg.n_a, dtype=int)
        self.waypoint = np.full((cfg.n_a, 2), np.nan)
        self._splits_done = [False] * len(cfg.attacker_policy.splits)
        self.frozen_a = np.zeros(cfg.n_a, dtype=bool)
        self.frozen_d = np.zeros(cfg.n_d, dtype=bool)
        self.history: list[tuple] = []
        self._log_state()

    # ------------------------------------------------------------------
    # bookkeeping
    # ------------------------------------------------------------------

    def event(self, kind: str, **data) -> None:
        self.events.append(Event(self.tick_count, self.t, kind, data))

    def _add_swarm(self, members, sid=None) -> int:
        if sid is None:
            sid, self._next_sid = self._next_sid, self._next_sid + 1
        pts = self.ra[list(members)]
        geo = Swarm.from_positions(members, self.ra)
        self.swarms[sid] = SwarmTrack(sid, tuple(sorted(members)), geo.hull_center - pts.mean(axis=0), self.t)
        return sid

    def swarm_center(self, sid: int) -> np.ndarray:
        s = self.swarms[sid]
        return self.ra[list(s.members)].mean(axis=0) + s.hull_offset

    def swarm_radius(self, sid: int) -> float:
        pts = self.ra[list(self.swarms[sid].members)]
        return float(np.hypot(*(pts - self.swarm_center(sid)).T).max())

    def swarm_velocity(self, sid: int) -> np.ndarray:
        return self.va[list(self.swarms[sid].members)].mean(axis=0)

    def swarm_geometry(self, sid: int) -> Swarm:
        return Swarm.from_positions(self.swarms[sid].members, self.ra)

    def group_of_swarm(self, sid: int) -> Group | None:
        for g in self.groups:
            if sid in g.swarm_ids:
                return g
        return None

    def established_edges(self) -> list[tuple[int, int]]:
        out = []
        for g in self.groups:
            if g.net is not None:
                out.extend(g.net.edges)
        return out

    @property
    def all_done(self) -> bool:
        return all(g.phase is Phase.DONE for g in self.groups)

    # ------------------------------------------------------------------
    # main loop
    # ------------------------------------------------------------------

    def tick(self) -> World:
        if self.halted:
            return self
        cfg = self.cfg
        if self.all_done:
            self.tick_count += 1
            self.t = self.tick_count * cfg.dt
            return self
        self._scripted_splits()
        if not self.alerted:
            self._check_alert()
        if self.alerted:
            self._recluster()
            for g in list(self.groups):
                self._advance_phase(g)
        ua, ud = self._controls()
        ra0, rd0 = self.ra.copy(), self.rd.copy()
        ra1, va1 = step_arrays(self.ra, self.va, ua, cfg.dt, cfg.c_d, self.v_a_max)
        rd1, vd1 = step_arrays(self.rd, self.vd, ud, cfg.dt, cfg.c_d, self.v_d_max)
        ra1[self.frozen_a], va1[self.frozen_a] = ra0[self.frozen_a], 0.0
        rd1[self.frozen_d], vd1[self.frozen_d] = rd0[self.frozen_d], 0.0
        self._enforce_string_length(rd1, vd1)
        self._enforce_barriers(ra0, rd0, ra1, va1, rd1, vd1)
        self.ra, self.va, self.rd, self.vd = ra1, va1, rd1, vd1
        self.tick_count += 1
        self.t = self.tick_count * cfg.dt
        self._check_invariants()
        self._log_state()
        return self

    def run(self, max_time: float | None = None) -> str:
        """Tick until every group is done, a breach happens, or time runs out."""
        limit = self.cfg.max_time if max_time is None else max_time
        n_max = int(round(limit / self.cfg.dt))
        while self.tick_count < n_max:
            if self.halted:
                return self.halted
            if self.all_done:
                return "success"
            self.tick()
        if self.halted:
            return self.halted
        if self.all_done:
            return "success"
        self.event("timeout", max_time=limit)
        return "timeout"

    # ------------------------------------------------------------------
    # attackers: scripted splits and sensing
    # ------------------------------------------------------------------

    def _scripted_splits(self) -> None:
        for i, s in enumerate(self.cfg.attacker_policy.splits):
            if not self._splits_done[i] and self.t >= s.time - 1e-12:
                self._splits_done[i] = True
                members = list(s.members)
                self.flock[members] = i + 1
                self.waypoint[members] = s.waypoint
                self.event("attackers split (script)", members=members)
        # waypoint reached -> head for the protected area
        for i, s in enumerate(self.cfg.attacker_policy.splits):
            if not self._splits_done[i]:
                continue
            idx = np.flatnonzero(self.flock == i + 1)
            live = idx[~np.isnan(self.waypoint[idx, 0])]
            if len(live) and np.hypot(*(self.ra[live].mean(axis=0) - s.waypoint)) < s.reach_radius:
                self.waypoint[live] = np.nan

    def _check_alert(self) -> None:
        cfg = self.cfg
        d = np.hypot(*(self.ra - cfg.protected.center).T)
        if not np.any(d <= cfg.rho_d_sense):
            return
        self.alerted = True
        com = self.ra.mean(axis=0)
        heading = math.atan2(*(cfg.protected.center - com)[::-1])
        theta = heading + math.pi
        n = cfg.n_d
        if cfg.rho_gather == "auto":
            res = gathering_center(cfg, com, heading, self.rd)
            center, rho, feasible = res.center, res.rho, res.feasible
            if not feasible:
                self.event("gathering infeasible")
        else:
            rho = float(cfg.rho_gather)
            center, feasible = cfg.protected.center + rho * unit(theta), True
        goals = gather_goals(center, theta, n, cfg.formation_spacing)
        ga = gather_goal_assignment(self.rd, goals, self.v_d_max)
        g = self.groups[0]
        g.members = list(ga.beta)
        g.theta = theta
        g.goals = goals
        g.goal_vel = np.zeros_like(goals)
        self.event("gathering planned", center=[round(float(x), 6) + 0.0 for x in center], rho=round(rho, 6),
                   feasible=bool(feasible), makespan=round(ga.makespan, 6))

    # ------------------------------------------------------------------
    # clustering and re-assignment
    # ------------------------------------------------------------------

    def _recluster(self) -> None:
        cfg = self.cfg
        for sid in sorted(self.swarms):
            owner = self.group_of_swarm(sid)
            if owner is not None and owner.phase >= Phase.ENCLOSE_CLOSED:
                continue  # enclosed swarms cannot drift apart
            track = self.swarms[sid]
            if len(track.members) < 2:
                continue
            pts = self.ra[list(track.members)]
            r_com = float(np.hypot(*(pts - pts.mean(axis=0)).T).max())
            # the hull centre lies inside the hull, so the radius about it is at most 2 r_com
            if 2.0 * r_com <= connectivity_radius(cfg.r_s_max, cfg.n_d, cfg.n_a, len(track.members)):
                continue
            geo = self.swarm_geometry(sid)
            if not recluster_trigger(geo, cfg.r_s_max, cfg.n_d, cfg.n_a):
                continue
            members = np.array(track.members)
            pts = np.hstack((self.ra[members], self.va[members]))
            part = dbscan(pts, self.eps_nb, cfg.m_pts, cfg.phi, positions=self.ra, indices=members)
            if len(part.clusters) < 2:
                continue
            clusters = [list(c.member_indices) for c in part.clusters]
            for i in sorted(part.noise):  # stragglers join the nearest cluster
                k = min(range(len(clusters)),
                        key=lambda c: (float(np.hypot(*(self.ra[clusters[c]] - self.ra[i]).T).min()), c))
                clusters[k].append(i)
            new_ids = [self._add_swarm(tuple(c)) for c in clusters]
            del self.swarms[sid]
            self.stats.splits += 1
            self.event("split detected", swarm=sid, radius=round(geo.radius, 6),
                       threshold=round(connectivity_radius(cfg.r_s_max, cfg.n_d, cfg.n_a, geo.size), 6))
            self.event("recluster", swarm=sid, new_swarms=new_ids,
                       sizes=[len(self.swarms[k].members) for k in new_ids], noise=sorted(part.noise))
            if owner is not None:
                owner.swarm_ids = [k for k in owner.swarm_ids if k != sid] + new_ids
                if owner.phase in (Phase.SEEK, Phase.ENCLOSE_OPEN, Phase.ENCLOSE_CLOSED):
                    self._reassign(owner)

    def _reassign(self, group: Group) -> None:
        cfg = self.cfg
        if cfg.global_reassign:
            pool = [g for g in self.groups if Phase.SEEK <= g.phase <= Phase.ENCLOSE_CLOSED]
        else:
            pool = [group]
        members = [j for g in pool for j in g.members]
        sids = [s for g in pool for s in g.swarm_ids]
        if len(sids) < 2:
            return
        att = AttackerSummary([self.swarm_center(s) for s in sids],
                              [len(self.swarms[s].members) for s in sids], tuple(range(len(sids))))
        sol = solve_hierarchical(att, DefenderSummary(self.rd[members]), cfg.n_leaf)
        for g in pool:
            self.groups.remove(g)
        new_groups = []
        for k, block in enumerate(sol.block_map):
            sub = [members[p] for p in block]
            g = Group(self._next_gid, sub, Phase.SEEK, [sids[k]], net=StringNetGraph.open(sub))
            self._next_gid += 1
            self._enter_seek(g)
            new_groups.append(g)
        self.groups.extend(new_groups)
        self.event("re-assignment", parent_groups=[g.gid for g in pool],
                   groups=[{"group": g.gid, "swarm": g.swarm_ids[0], "defenders": list(g.members)}
                           for g in new_groups])

    # ------------------------------------------------------------------
    # phase machine
    # ------------------------------------------------------------------

    def _face_angle(self, sid: int) -> float:
        """Formation heading: from the protected area towards the swarm."""
        d = self.swarm_center(sid) - self.cfg.protected.center
        return math.atan2(d[1], d[0])

    def _net_radius(self, sid: int, n: int) -> tuple[float, float]:
        """Net radius and the swarm clearance it must exceed."""
        cfg = self.cfg
        clearance = self.swarm_radius(sid) + cfg.b_d
        want = clearance + cfg.rho_a + cfg.rho_d + _NET_MARGIN
        cap = max_closed_radius(n, cfg.r_s_min - 2 * cfg.b_d)
        if cap <= clearance:
            cap = max_closed_radius(n, cfg.r_s_max - 2 * cfg.b_d)
        return min(want, cap), clearance

    def _transition(self, g: Group, phase: Phase) -> None:
        self.event("phase", group=g.gid, frm=g.phase.label, to=phase.label)
        g.phase = phase

    def _enter_seek(self, g: Group) -> None:
        g.virtual = None
        theta = self._face_angle(g.swarm_ids[0])
        side = unit(theta + math.pi / 2)
        if float((self.rd[g.members[0]] - self.rd[g.members[-1]]) @ side) < 0:
            g.members.reverse()  # keep slot 1 on the left so nobody crosses over
            g.net = StringNetGraph.open(g.members)
        g.theta = theta

    def _advance_phase(self, g: Group) -> None:
        cfg = self.cfg
        n = len(g.members)
        r = self.rd[g.members]
        if g.phase is Phase.GATHER:
            if g.goals is None:
                return
            near = np.hypot(*(r - g.goals).T) <= cfg.b_d
            pairs = list(zip(g.members[:-1], g.members[1:]))
            if near.all() and can_establish(self.rd, self.vd, pairs, cfg.r_s_min, cfg.eps_v):
                g.net = StringNetGraph.open(g.members)
                self.event("net established", group=g.gid, net="open", members=list(g.members))
                self._transition(g, Phase.SEEK)
                self._enter_seek(g)
                if len(g.swarm_ids) > 1:
                    self._reassign(g)
                    return
            else:
                return
        if g.phase is Phase.SEEK:
            sid = g.swarm_ids[0]
            c = self.swarm_center(sid)
            rho, _ = self._net_radius(sid, n)
            g.theta = self._face_angle(sid)
            line_c = c - (rho + _SEEK_OFFSET) * unit(g.theta)
            if g.virtual is None:
                g.virtual = line_c
            # the line may advance on the swarm or slide sideways, but never give way
            vel = self._ratchet(g, line_c, self.swarm_velocity(sid))
            g.goals = gather_goals(g.virtual, g.theta, n, cfg.formation_spacing)
            g.goal_vel = np.tile(vel, (n, 1))
            rho_c, clearance = self._net_radius(sid, n)
            offset = r.mean(axis=0) - c
            # every defender must already be between the swarm and the protected area
            heading = unit(g.theta)
            ahead = float((r @ heading).max()) < float((self.ra[list(self.swarms[sid].members)] @ heading).min())
            if rho_c > clearance and ahead and np.hypot(*offset) <= rho + _SEEK_TRIGGER:
                g.rho_sn = rho_c
                self._transition(g, Phase.ENCLOSE_OPEN)
                # the enclosure is anchored where the swarm was when enclosing began;
                # a swarm still heading for the protected area runs into the semicircle
                g.virtual = c.copy()
                g.goals = enclose_open_goals(c, g.theta, n, g.rho_sn, clearance)
                g.goal_vel = np.zeros((n, 2))
            return
        if g.phase is Phase.ENCLOSE_OPEN:
            sid = g.swarm_ids[0]
            g.goal_vel = np.tile(self._follow(g, sid), (n, 1))
            g.goals = enclose_open_goals(g.virtual, g.theta, n, g.rho_sn)
            ends = [0, n - 1]
            if (np.hypot(*(r[ends] - g.goals[ends]).T) < cfg.b_d).all():
                self._transition(g, Phase.ENCLOSE_CLOSED)
                g.goals = enclose_closed_goals(g.virtual, g.theta, n, g.rho_sn, cfg.r_s_max)
            return
        if g.phase is Phase.ENCLOSE_CLOSED:
            sid = g.swarm_ids[0]
            g.goal_vel = np.tile(self._follow(g, sid), (n, 1))
            g.goals = enclose_closed_goals(g.virtual, g.theta, n, g.rho_sn, cfg.r_s_max)
            near = np.hypot(*(r - g.goals).T) <= cfg.b_d
            closing = [(g.members[-1], g.members[0])]
            if near.all() and can_establish(self.rd, self.vd, closing, cfg.r_s_min, cfg.eps_v):
                inside = points_in_polygon(self.ra[list(self.swarms[sid].members)], r)
                if not inside.all():
                    self.event("containment lost", group=g.gid, swarm=sid)
                    self._transition(g, Phase.SEEK)
                    self._enter_seek(g)
                    return
                g.net = StringNetGraph.closed(g.members)
                g.closed_at = self.tick_count
                g.safe_index = closest_safe_area(g.virtual, cfg.safe_areas)
                self.stats.closed_nets += 1
                self.event("net established", group=g.gid, net="closed", members=list(g.members),
                           swarm=sid, safe_area=g.safe_index)
                self._transition(g, Phase.HERD)
            return
        if g.phase is Phase.HERD:
            sid = g.swarm_ids[0]
            safe = cfg.safe_areas[g.safe_index]
            to_safe = safe.center - g.virtual
            dist = float(np.hypot(*to_safe))
            speed = min(cfg.herd_speed_ratio * self.v_a_max, _HERD_TAPER * dist)
            vel = speed * to_safe / dist if dist > 1e-12 else np.zeros(2)
            vel = vel + self._virtual_avoidance(g)
            g.virtual = g.virtual + vel * cfg.dt
            g.goals = enclose_closed_goals(g.virtual, g.theta, n, g.rho_sn, cfg.r_s_max)
            g.goal_vel = np.tile(vel, (n, 1))
            attackers = list(self.swarms[sid].members)
            if safe.contains(g.virtual) and all(safe.contains(p) for p in self.ra[attackers]) \
                    and all(safe.contains(p) for p in r):
                self._transition(g, Phase.DONE)
                self.stats.herd_complete += 1
                self.event("herd complete", group=g.gid, swarm=sid, safe_area=g.safe_index)
                self.frozen_a[attackers] = True
                self.frozen_d[g.members] = True
            return

    def _follow(self, g: Group, sid: int) -> np.ndarray:
        """Move the enclosure anchor with the swarm; returns the anchor velocity."""
        return self._ratchet(g, self.swarm_center(sid), self.swarm_velocity(sid))

    def _ratchet(self, g: Group, target: np.ndarray, vel: np.ndarray) -> np.ndarray:
        """Move ``g.virtual`` to ``target`` except towards the protected area.

        Attackers pressing on the protected side of a formation would otherwise
        drag it along with them.  Returns the matching feed-forward velocity.
        """
        toward = -unit(g.theta)
        shift = target - g.virtual
        along = float(shift @ toward)
        if along > 0:
            shift = shift - along * toward
        g.virtual = g.virtual + shift
        along = float(vel @ toward)
        return vel - along * toward if along > 0 else vel

    def _virtual_avoidance(self, g: Group) -> np.ndarray:
        push = np.zeros(2)
        margin = self.gains.group_margin
        for o in self.groups:
            if o is g or o.phase < Phase.ENCLOSE_OPEN:
                continue
            c_o = o.virtual if o.virtual is not None else self.rd[o.members].mean(axis=0)
            rad_o = float(np.hypot(*(self.rd[o.members] - c_o).T).max())
            away = g.virtual - c_o
            d = float(np.hypot(*away))
            gap = d - g.rho_sn - rad_o
            if gap < margin and d > 1e-12:
                push += 0.5 * self.v_a_max * min(1.0, (margin - gap) / margin) * away / d
        return push

    # ------------------------------------------------------------------
    # controls
    # ------------------------------------------------------------------

    def _controls(self) -> tuple[np.ndarray, np.ndarray]:
        cfg = self.cfg
        ud = np.zeros_like(self.rd)
        edges = self.established_edges()
        partner_rows: dict[int, list[int]] = {}
        for a, b in edges:
            partner_rows.setdefault(a, []).append(b)
            partner_rows.setdefault(b, []).append(a)
        circles = {}
        for g in self.groups:
            if g.phase >= Phase.ENCLOSE_CLOSED:
                c = self.rd[g.members].mean(axis=0)
                circles[g.gid] = (c, float(np.hypot(*(self.rd[g.members] - c).T).max()))
        for g in self.groups:
            idx = np.array(g.members)
            if g.goals is None:
                goals, gvel = self.home[idx], np.zeros((len(idx), 2))
            else:
                goals, gvel = g.goals, g.goal_vel
            rows, pos = [], []
            for k, j in enumerate(g.members):
                for p in partner_rows.get(j, ()):
                    rows.append(k)
                    pos.append(self.rd[p])
            mask = np.ones(cfg.n_d, dtype=bool)
            mask[idx] = False
            others = np.vstack((self.rd[idx], self.rd[mask]))
            others_groups = [circles[o.gid] for o in self.groups
                             if o is not g and o.gid in circles and g.phase >= Phase.ENCLOSE_OPEN]
            ud[idx] = defender_controls(self.rd[idx], self.vd[idx], goals, gvel, self.gains,
                                        others=others, partners=(np.array(rows, dtype=int), np.array(pos)),
                                        other_groups=others_groups)
        # attackers
        targets = np.tile(cfg.protected.center, (cfg.n_a, 1))
        wp = ~np.isnan(self.waypoint[:, 0])
        targets[wp] = self.waypoint[wp]
        if edges:
            e = np.array(edges)
            sf = string_constraint_forces(self.ra, self.rd[e[:, 0]], self.rd[e[:, 1]], self.d_act,
                                          cfg.rho_a, cfg.u_a_max)
        else:
            sf = None
        ua = np.zeros_like(self.ra)
        sensed_any = np.hypot(*(self.rd[None] - self.ra[:, None]).transpose(2, 0, 1)) < cfg.rho_a_sense
        ua_all = attacker_controls(self.ra, self.va, targets, cfg.attacker_policy, cfg.u_a_max, cfg.c_d,
                                   defenders=self.rd if sensed_any.any() else None,
                                   sense_radius=cfg.rho_a_sense, labels=self.flock, string_force=sf)
        ua[:] = ua_all
        ua[self.frozen_a] = 0.0
        ud[self.frozen_d] = 0.0
        return ua, ud

    # ------------------------------------------------------------------
    # strings
    # ------------------------------------------------------------------

    def _enforce_string_length(self, rd: np.ndarray, vd: np.ndarray) -> None:
        """Strings are inextensible beyond ``r_s_max``: pull overstretched pairs back."""
        edges = self.established_edges()
        if not edges:
            return
        e = np.array(edges)
        limit = self.cfg.r_s_max * (1.0 - 1e-9)
        for _ in range(20):
            diff = rd[e[:, 1]] - rd[e[:, 0]]
            length = np.hypot(diff[:, 0], diff[:, 1])
            over = np.flatnonzero(length > limit)
            if not len(over):
                return
            for k in over:
                a, b = e[k]
                d = rd[b] - rd[a]
                L = float(np.hypot(*d))
                if L <= limit:
                    continue
                n = d / L
                fa, fb = self.frozen_d[a], self.frozen_d[b]
                excess = L - limit
                if fa and fb:
                    continue
                wa, wb = (0.0, 1.0) if fa else (1.0, 0.0) if fb else (0.5, 0.5)
                rd[a] += wa * excess * n
                rd[b] -= wb * excess * n
                sep = float((vd[b] - vd[a]) @ n)
                if sep > 0:
                    vd[a] += wa * sep * n
                    vd[b] -= wb * sep * n
                self.stats.string_projections += 1
        vmax = self.v_d_max * (1 - 1e-12)
        s = np.hypot(vd[:, 0], vd[:, 1])
        over = s >= vmax
        vd[over] *= (vmax / s[over])[:, None]

    def _enforce_barriers(self, ra0, rd0, ra1, va1, rd1, vd1) -> None:
        """No attacker may pass through a string between two ticks."""
        edges = self.established_edges()
        if not edges:
            return
        closed = [g.members for g in self.groups if g.net is not None and g.net.kind is NetKind.CLOSED]
        self.stats.crossing_reflections += enforce_barriers(ra0, ra1, va1, rd0, rd1, vd1, np.array(edges),
                                                            closed)

    # ------------------------------------------------------------------
    # checks and logging
    # ------------------------------------------------------------------

    def _check_invariants(self) -> None:
        cfg = self.cfg
        for g in self.groups:
            if g.net is None:
                continue
            e = g.net.edge_array()
            if not len(e):
                continue
            lengths = np.hypot(*(self.rd[e[:, 0]] - self.rd[e[:, 1]]).T)
            stretch = float(lengths.max()) / cfg.r_s_max
            self.stats.max_stretch = max(self.stats.max_stretch, stretch)
            if g.net.kind is NetKind.CLOSED:
                self.stats.max_closed_stretch = max(self.stats.max_closed_stretch, stretch)
                inside = points_in_polygon(self.ra[list(self.swarms[g.swarm_ids[0]].members)],
                                           self.rd[g.members])
                if not inside.all():
                    self.stats.containment_violations += 1
        sa = float(np.hypot(*self.va.T).max()) / self.v_a_max
        sd = float(np.hypot(*self.vd.T).max()) / self.v_d_max
        self.stats.max_attacker_speed_ratio = max(self.stats.max_attacker_speed_ratio, sa)
        self.stats.max_defender_speed_ratio = max(self.stats.max_defender_speed_ratio, sd)
        d = np.hypot(*(self.ra - cfg.protected.center).T)
        breach = np.flatnonzero(d <= cfg.protected.radius)
        if len(breach):
            self.stats.breaches += len(breach)
            self.event("breach", attackers=[int(i) for i in breach])
            self.halted = "breach"

    def phase_of_defenders(self) -> tuple[np.ndarray, np.ndarray]:
        phase = np.zeros(self.cfg.n_d, dtype=int)
        gid = np.zeros(self.cfg.n_d, dtype=int)
        for g in self.groups:
            phase[g.members] = int(g.phase)
            gid[g.members] = g.gid
        return phase, gid

    def swarm_labels(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        sid = np.full(self.cfg.n_a, -1, dtype=int)
        phase = np.zeros(self.cfg.n_a, dtype=int)
        gid = np.full(self.cfg.n_a, -1, dtype=int)
        for k, s in self.swarms.items():
            sid[list(s.members)] = k
            g = self.group_of_swarm(k)
            if g is not None:
                phase[list(s.members)] = int(g.phase)
                gid[list(s.members)] = g.gid
        return sid, phase, gid

    def _log_state(self) -> None:
        if not self.record:
            return
        dphase, dgid = self.phase_of_defenders()
        asid, aphase, agid = self.swarm_labels()
        dsid = np.full(self.cfg.n_d, -1, dtype=int)
        for g in self.groups:
            if len(g.swarm_ids) == 1:
                dsid[g.members] = g.swarm_ids[0]
        self.history.append((self.t, self.ra.copy(), self.va.copy(), self.rd.copy(), self.vd.copy(),
                             aphase, agid, asid, dphase, dgid, dsid,
                             tuple(tuple(e) for e in self.established_edges())))


def _cross(u: np.ndarray, w: np.ndarray) -> np.ndarray:
    return u[..., 0] * w[..., 1] - u[..., 1] * w[..., 0]


def points_in_polygon(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Even-odd ray-casting test for each point against a closed polygon."""
    p = np.atleast_2d(np.asarray(points, float))
    v = np.asarray(poly, float)
    x, y = p[:, 0][:, None], p[:, 1][:, None]
    w = v[np.r_[1:len(v), 0]]
    x1, y1 = v[:, 0][None], v[:, 1][None]
    x2, y2 = w[:, 0][None], w[:, 1][None]
    crosses = (y1 > y) != (y2 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
    hit = crosses & (x < xint)
    return (hit.sum(axis=1) % 2) == 1


def _reflect(i, a, b, side, ra1, va1, edge_vel, force=False) -> int:
    ab = b - a
    L = float(np.hypot(*ab))
    if L < 1e-12:
        return 0
    nrm = np.array([-ab[1], ab[0]]) / L
    d1 = float((ra1[i] - a) @ nrm)
    target = side * max(abs(d1) if not force else 0.0, 1e-3)
    if side * d1 >= 1e-3 and not force:
        return 0
    ra1[i] = ra1[i] + (target - d1) * nrm
    rel = float((va1[i] - edge_vel) @ nrm) * side
    if rel < 0:
        va1[i] = va1[i] - rel * side * nrm
    return 1


def enforce_barriers(ra0, ra1, va1, rd0, rd1, vd1, edges: np.ndarray, closed_nets=()) -> int:
    """Undo any string crossing between two states, in place; returns the number of corrections.

    ``ra0 -> ra1`` are attacker positions before and after the step, ``rd0 -> rd1``
    defender positions, ``edges`` an ``(m, 2)`` array of defender index pairs and
    ``closed_nets`` the member lists of closed nets.  A crossing attacker is put
    back 1 mm on its original side with the normal part of its velocity
    (relative to the string) removed.  A closed net additionally keeps its
    inside/outside status, which catches a point slipping past a moving corner.
    """
    if not len(edges):
        return 0
    count = 0
    e = np.asarray(edges, dtype=int).reshape(-1, 2)
    a0, b0, a1, b1 = rd0[e[:, 0]], rd0[e[:, 1]], rd1[e[:, 0]], rd1[e[:, 1]]
    s0 = _cross(b0 - a0, ra0[:, None, :] - a0[None])
    s1 = _cross(b1 - a1, ra1[:, None, :] - a1[None])
    cand = np.argwhere((s0 * s1 < 0) | ((s1 == 0) & (s0 != 0)))
    for i, k in cand:
        lam = s0[i, k] / (s0[i, k] - s1[i, k])
        p = ra0[i] + lam * (ra1[i] - ra0[i])
        a = a0[k] + lam * (a1[k] - a0[k])
        b = b0[k] + lam * (b1[k] - b0[k])
        ab = b - a
        t = float((p - a) @ ab) / max(float(ab @ ab), 1e-24)
        if not (-1e-9 <= t <= 1 + 1e-9):
            continue
        count += _reflect(i, a1[k], b1[k], np.sign(s0[i, k]), ra1, va1, vd1[e[k]].mean(axis=0))
    for members in closed_nets:
        poly0, poly1 = rd0[list(members)], rd1[list(members)]
        in0 = points_in_polygon(ra0, poly0)
        in1 = points_in_polygon(ra1, poly1)
        for i in np.flatnonzero(in0 != in1):
            want_inside = bool(in0[i])
            a, b = poly1, poly1[np.r_[1:len(poly1), 0]]
            dist, _, _ = segment_distances(ra1[i][None], a, b)
            k = int(np.argmin(dist[0]))
            ab = b[k] - a[k]
            inward = np.sign(_cross(ab[None], (poly1.mean(axis=0) - a[k])[None])[0])
            side = inward if want_inside else -inward
            count += _reflect(i, a[k], b[k], side, ra1, va1, np.zeros(2), force=True)
    return count


def simulate(cfg: ScenarioConfig, max_time: float | None = None, record: bool = True) -> tuple[World, str]:
    world = World(cfg, record=record)
    status = world.run(max_time)
    return world, status
