"""Shared domain types: agents, areas, string-net graphs and scenario configuration.

All values here are immutable once built. Vectors are plain ``float64`` numpy
arrays of shape ``(2,)`` that have been checked for finiteness and frozen.
"""

from __future__ import annotations

import dataclasses
import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

Vec2 = np.ndarray


def vec2(x: Any, y: float | None = None) -> Vec2:
    """Build a frozen, finite 2-vector from ``(x, y)`` or any length-2 sequence."""
    arr = np.array([x, y] if y is not None else x, dtype=float).reshape(-1)
    if arr.shape != (2,):
        raise ValueError(f"expected a 2-vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite vector component: {arr.tolist()}")
    arr.setflags(write=False)
    return arr


def unit(theta: float) -> Vec2:
    """Unit vector at angle ``theta`` from the x-axis."""
    return np.array([math.cos(theta), math.sin(theta)])


def speed_bound(u_max: float, c_d: float) -> float:
    """Terminal speed sqrt(u_max / c_d) of a drag-limited double integrator."""
    if not (u_max > 0 and c_d > 0):
        raise ValueError(f"speed_bound needs positive inputs, got u_max={u_max}, c_d={c_d}")
    return math.sqrt(u_max / c_d)


def _json_eq(self, other: object) -> bool:
    # value equality for types holding numpy vectors
    if type(other) is not type(self):
        return NotImplemented
    return self.to_json() == other.to_json()


@dataclass(frozen=True)
class AgentState:
    r: Vec2
    v: Vec2

    def __post_init__(self) -> None:
        object.__setattr__(self, "r", vec2(self.r))
        object.__setattr__(self, "v", vec2(self.v))

    @property
    def speed(self) -> float:
        return float(np.hypot(*self.v))

    def to_json(self) -> dict:
        return {"r": self.r.tolist(), "v": self.v.tolist()}

    __eq__ = _json_eq


@dataclass(frozen=True)
class Disk:
    center: Vec2
    radius: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", vec2(self.center))
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise ValueError(f"disk radius must be positive, got {self.radius}")
        object.__setattr__(self, "radius", float(self.radius))

    def contains(self, p: Sequence[float]) -> bool:
        return float(np.hypot(*(np.asarray(p) - self.center))) <= self.radius

    def overlaps(self, other: Disk) -> bool:
        return float(np.hypot(*(self.center - other.center))) <= self.radius + other.radius

    def to_json(self) -> dict:
        return {"center": self.center.tolist(), "radius": self.radius}

    __eq__ = _json_eq

    @classmethod
    def from_json(cls, d: dict) -> Disk:
        _reject_unknown(d, {"center", "radius"}, "disk")
        return cls(d["center"], d["radius"])


class NetKind(enum.Enum):
    OPEN = "open"
    CLOSED = "closed"


@dataclass(frozen=True)
class StringNetGraph:
    """Defenders joined by string barriers: a path (open) or a cycle (closed)."""

    kind: NetKind
    members: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]

    @classmethod
    def open(cls, members: Iterable[int]) -> StringNetGraph:
        m = tuple(int(j) for j in members)
        return cls(NetKind.OPEN, m, tuple(zip(m[:-1], m[1:])))

    @classmethod
    def closed(cls, members: Iterable[int]) -> StringNetGraph:
        m = tuple(int(j) for j in members)
        if len(m) < 3:
            raise ValueError("a closed net needs at least 3 defenders")
        return cls(NetKind.CLOSED, m, tuple(zip(m, m[1:] + m[:1])))

    def __post_init__(self) -> None:
        if len(set(self.members)) != len(self.members):
            raise ValueError("duplicate defender in net")
        n = len(self.members)
        expected = n - 1 if self.kind is NetKind.OPEN else n
        if len(self.edges) != max(expected, 0):
            raise ValueError(f"{self.kind.value} net over {n} members needs {expected} edges")

    def edge_array(self) -> np.ndarray:
        return np.array(self.edges, dtype=int).reshape(-1, 2)


def can_establish(
    r: np.ndarray, v: np.ndarray, pairs: Iterable[tuple[int, int]], r_s_min: float, eps_v: float
) -> bool:
    """True when every pair is close enough and velocity-matched to tie a string."""
    for j, k in pairs:
        if np.hypot(*(r[j] - r[k])) > r_s_min or np.hypot(*(v[j] - v[k])) > eps_v:
            return False
    return True


# ---------------------------------------------------------------------------
# Attacker policy (configuration half; behavior lives in stringnet.control)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SplitScript:
    """At ``time`` the listed attackers break off, head for ``waypoint``, then for the protected area."""

    time: float
    members: tuple[int, ...]
    waypoint: Vec2
    reach_radius: float = 2.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "members", tuple(int(i) for i in self.members))
        object.__setattr__(self, "waypoint", vec2(self.waypoint))

    def to_json(self) -> dict:
        return {
            "time": self.time,
            "members": list(self.members),
            "waypoint": self.waypoint.tolist(),
            "reach_radius": self.reach_radius,
        }

    __eq__ = _json_eq


POLICY_KINDS = ("Flock", "SplitOnBlock")


@dataclass(frozen=True)
class AttackerPolicyConfig:
    kind: str = "Flock"
    goal_gain: float = 1.0  # fraction of u_a_max spent on goal attraction
    cohesion: float = 0.3
    alignment: float = 0.5
    separation: float = 2.0
    separation_radius: float = 0.5
    defender_repulsion: float = 1.5
    avoid_tangential: float = 0.6
    blockage_cone: float = math.radians(30.0)
    divergence_gain: float = 0.8
    splits: tuple[SplitScript, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "splits", tuple(self.splits))

    def to_json(self) -> dict:
        d = dataclasses.asdict(self)
        d["splits"] = [s.to_json() for s in self.splits]
        return d

    @classmethod
    def from_json(cls, d: dict) -> AttackerPolicyConfig:
        names = {f.name for f in dataclasses.fields(cls)}
        _reject_unknown(d, names, "attacker_policy")
        kw = dict(d)
        splits = []
        for s in kw.pop("splits", []):
            _reject_unknown(s, {"time", "members", "waypoint", "reach_radius"}, "split")
            splits.append(SplitScript(**s))
        return cls(splits=tuple(splits), **kw)


# ---------------------------------------------------------------------------
# Scenario configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScenarioConfig:
    n_a: int
    n_d: int
    c_d: float
    u_a_max: float
    u_d_max: float
    rho_a: float
    rho_d: float
    rho_d_sense: float
    rho_a_sense: float
    protected: Disk
    safe_areas: tuple[Disk, ...]
    r_s_max: float
    r_s_min: float
    attackers: tuple[AgentState, ...]
    defenders: tuple[AgentState, ...]
    eps_v: float = 0.1
    b_d: float = 0.2
    spacing: float | None = None  # None -> 0.9 * r_s_min
    phi: float = 0.25
    m_pts: int = 3
    eps_rule: str = "body"  # "body" or "lemma"
    rho_gather: float | str = "auto"
    attacker_policy: AttackerPolicyConfig = field(default_factory=AttackerPolicyConfig)
    dt: float = 0.01
    seed: int = 0
    k_p: float = 4.0
    k_v: float = 4.0
    n_leaf: int = 4
    herd_speed_ratio: float = 0.5
    global_reassign: bool = False
    max_time: float = 600.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "safe_areas", tuple(self.safe_areas))
        object.__setattr__(self, "attackers", tuple(self.attackers))
        object.__setattr__(self, "defenders", tuple(self.defenders))

    @property
    def v_a_max(self) -> float:
        return speed_bound(self.u_a_max, self.c_d)

    @property
    def v_d_max(self) -> float:
        return speed_bound(self.u_d_max, self.c_d)

    @property
    def formation_spacing(self) -> float:
        return self.spacing if self.spacing is not None else 0.9 * self.r_s_min

    def replace(self, **changes: Any) -> ScenarioConfig:
        return dataclasses.replace(self, **changes)

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        out: dict[str, Any] = {}
        for f in dataclasses.fields(self):
            val = getattr(self, f.name)
            if f.name == "protected":
                val = val.to_json()
            elif f.name == "safe_areas":
                val = [s.to_json() for s in val]
            elif f.name in ("attackers", "defenders"):
                val = [a.to_json() for a in val]
            elif f.name == "attacker_policy":
                val = val.to_json()
            out[f.name] = val
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)

    __eq__ = _json_eq

    @classmethod
    def from_json(cls, d: dict) -> ScenarioConfig:
        names = {f.name for f in dataclasses.fields(cls)}
        _reject_unknown(d, names, "scenario")
        kw = dict(d)
        kw["protected"] = Disk.from_json(kw["protected"])
        kw["safe_areas"] = tuple(Disk.from_json(s) for s in kw["safe_areas"])
        for key in ("attackers", "defenders"):
            states = []
            for s in kw[key]:
                _reject_unknown(s, {"r", "v"}, key)
                states.append(AgentState(s["r"], s.get("v", (0.0, 0.0))))
            kw[key] = tuple(states)
        if "attacker_policy" in kw:
            kw["attacker_policy"] = AttackerPolicyConfig.from_json(kw["attacker_policy"])
        try:
            return cls(**kw)
        except TypeError as exc:  # missing required field
            raise ValueError(str(exc)) from None

    @classmethod
    def loads(cls, text: str) -> ScenarioConfig:
        return cls.from_json(json.loads(text))

    @classmethod
    def load(cls, path: str | Path) -> ScenarioConfig:
        return cls.loads(Path(path).read_text(encoding="utf-8"))


def _reject_unknown(d: dict, allowed: set[str], where: str) -> None:
    extra = sorted(set(d) - allowed)
    if extra:
        raise ValueError(f"unknown field(s) in {where}: {', '.join(extra)}")


def validate_config(cfg: ScenarioConfig) -> list[str]:
    """Every violated standing assumption of ``cfg``; an empty list means valid."""
    bad: list[str] = []

    def need(ok: bool, msg: str) -> None:
        if not ok:
            bad.append(msg)

    need(cfg.n_a >= 1, "n_a must be a positive integer")
    need(cfg.n_d >= cfg.n_a, "defender count must be at least attacker count (n_d >= n_a)")
    need(cfg.n_d <= cfg.n_a, "resource allocation is only defined for n_d == n_a")
    need(len(cfg.attackers) == cfg.n_a, f"expected {cfg.n_a} attacker states, got {len(cfg.attackers)}")
    need(len(cfg.defenders) == cfg.n_d, f"expected {cfg.n_d} defender states, got {len(cfg.defenders)}")
    need(cfg.c_d > 0, "drag coefficient c_d must be positive")
    need(cfg.u_a_max > 0 and cfg.u_d_max > 0, "acceleration bounds must be positive")
    need(cfg.u_a_max < cfg.u_d_max, "speed ordering violated: attackers must be slower (u_a_max < u_d_max)")
    need(0 < cfg.rho_d <= cfg.rho_a, "body radii must satisfy 0 < rho_d <= rho_a")
    need(cfg.rho_d_sense > 0 and cfg.rho_a_sense > 0, "sensing radii must be positive")
    need(0 < cfg.r_s_min < cfg.r_s_max, "string lengths must satisfy 0 < r_s_min < r_s_max")
    need(cfg.eps_v > 0, "eps_v must be positive")
    need(cfg.b_d > 0, "b_d must be positive")
    need(cfg.formation_spacing > 0, "formation spacing must be positive")
    need(0 < cfg.phi < 1, "velocity weight phi must satisfy 0 < phi < 1")
    need(cfg.m_pts >= 2, "m_pts must be at least 2")
    need(cfg.eps_rule in ("body", "lemma"), "eps_rule must be 'body' or 'lemma'")
    need(len(cfg.safe_areas) >= 1, "at least one safe area is required")
    if isinstance(cfg.rho_gather, str):
        need(cfg.rho_gather == "auto", "rho_gather must be a number or 'auto'")
    else:
        need(cfg.rho_gather > cfg.protected.radius, "gathering distance must exceed the protected radius")
    areas = [("protected area", cfg.protected)] + [(f"safe area {m}", s) for m, s in enumerate(cfg.safe_areas)]
    for i in range(len(areas)):
        for k in range(i + 1, len(areas)):
            if areas[i][1].overlaps(areas[k][1]):
                bad.append(f"areas must be disjoint: {areas[i][0]} overlaps {areas[k][0]}")
    need(cfg.dt > 0, "dt must be positive")
    need(cfg.k_p > 0 and cfg.k_v > 0, "tracking gains must be positive")
    need(cfg.n_leaf >= 1, "n_leaf must be at least 1")
    need(0 < cfg.herd_speed_ratio < 1, "herd_speed_ratio must lie in (0, 1)")
    need(cfg.max_time > 0, "max_time must be positive")
    pol = cfg.attacker_policy
    need(pol.kind in POLICY_KINDS, f"attacker policy kind must be one of {POLICY_KINDS}")
    gains = (pol.goal_gain, pol.cohesion, pol.alignment, pol.separation, pol.defender_repulsion,
             pol.avoid_tangential, pol.divergence_gain)
    need(all(g >= 0 for g in gains), "attacker policy gains must be non-negative")
    for s in pol.splits:
        need(all(0 <= i < cfg.n_a for i in s.members), "split script names an unknown attacker")
    if cfg.c_d > 0 and cfg.u_a_max > 0 and cfg.u_d_max > 0:
        va, vd = cfg.v_a_max, cfg.v_d_max
        need(all(a.speed < va for a in cfg.attackers), "initial attacker speed must be below its bound")
        need(all(d.speed < vd for d in cfg.defenders), "initial defender speed must be below its bound")
    return bad
