"""Goal positions for every formation the defenders fly.

Angles follow one convention throughout: ``theta`` is the direction the
formation faces (towards the attackers).  Slot 1 of every formation sits on the
``theta + pi/2`` side, so a group keeps its slot order when it morphs from a
line into a semicircle and then into a full circle.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .core import Disk, Vec2, vec2

_TOL = 1e-12


class FormationKind(enum.Enum):
    GATHER_LINE = "GatherLine"
    SEEK_LINE = "SeekLine"
    ENCLOSE_OPEN = "EncloseOpen"
    ENCLOSE_CLOSED = "EncloseClosed"
    HERD = "Herd"


def _unit_rows(angles: np.ndarray) -> np.ndarray:
    return np.column_stack((np.cos(angles), np.sin(angles)))


def gather_goals(center, theta: float, n: int, spacing: float) -> np.ndarray:
    """``n`` static goals on a straight line through ``center``, normal to ``theta``."""
    if n < 2 or not spacing > 0:
        raise ValueError("line formation needs n >= 2 and spacing > 0")
    offsets = spacing * (n - 2 * np.arange(1, n + 1) + 1) / 2.0
    axis = np.array([math.cos(theta + math.pi / 2), math.sin(theta + math.pi / 2)])
    return np.asarray(center, float) + offsets[:, None] * axis


def open_angles(theta: float, n: int) -> np.ndarray:
    return theta + math.pi / 2 + math.pi * np.arange(n) / (n - 1)


def closed_angles(theta: float, n: int) -> np.ndarray:
    return theta + math.pi * (2 * np.arange(1, n + 1) - 1) / n


def enclose_open_goals(center, theta: float, n: int, rho_sn: float,
                       min_radius: float | None = None) -> np.ndarray:
    """Semicircle of radius ``rho_sn`` behind ``center`` as seen along ``theta``.

    ``min_radius`` is the swarm radius plus tracking error; the net must clear it.
    """
    if n < 2:
        raise ValueError("open formation needs n >= 2")
    if not rho_sn > 0 or (min_radius is not None and not rho_sn > min_radius):
        raise ValueError(f"net radius {rho_sn} does not clear the swarm ({min_radius})")
    return np.asarray(center, float) + rho_sn * _unit_rows(open_angles(theta, n))


def closed_chord(n: int, rho_sn: float) -> float:
    return 2.0 * rho_sn * math.sin(math.pi / n)


def max_closed_radius(n: int, chord: float) -> float:
    """Largest circle radius whose ``n`` equal chords do not exceed ``chord``."""
    return chord / (2.0 * math.sin(math.pi / n))


def enclose_closed_goals(center, theta: float, n: int, rho_sn: float,
                         r_s_max: float | None = None, min_radius: float | None = None) -> np.ndarray:
    """``n`` goals evenly spread on the full circle; neighbours must be string-reachable."""
    if n < 2:
        raise ValueError("closed formation needs n >= 2")
    if not rho_sn > 0 or (min_radius is not None and not rho_sn > min_radius):
        raise ValueError(f"net radius {rho_sn} does not clear the swarm ({min_radius})")
    if r_s_max is not None and closed_chord(n, rho_sn) > r_s_max + _TOL:
        raise ValueError(f"chord {closed_chord(n, rho_sn):.6g} exceeds the string length {r_s_max}")
    return np.asarray(center, float) + rho_sn * _unit_rows(closed_angles(theta, n))


def herd_goals(virtual_center, theta: float, n: int, rho_sn: float, r_s_max: float | None = None,
               velocity=(0.0, 0.0)) -> tuple[np.ndarray, np.ndarray]:
    """Rigid circle carried by the virtual agent; returns goals and their feed-forward velocities."""
    goals = enclose_closed_goals(virtual_center, theta, n, rho_sn, r_s_max)
    vel = np.tile(np.asarray(velocity, float), (n, 1))
    return goals, vel


def closest_safe_area(virtual_center, safe_areas: list[Disk] | tuple[Disk, ...]) -> int:
    if not safe_areas:
        raise ValueError("no safe areas")
    c = np.asarray(virtual_center, float)
    dists = [float(np.hypot(*(s.center - c))) for s in safe_areas]
    return int(np.argmin(dists))  # argmin keeps the first of equal values


@dataclass(frozen=True)
class FormationSpec:
    kind: FormationKind
    center: Vec2
    theta: float
    n: int
    size: float  # spacing for lines, radius for circles
    velocity: Vec2 = field(default_factory=lambda: vec2(0.0, 0.0))

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", vec2(self.center))
        object.__setattr__(self, "velocity", vec2(self.velocity))
        if self.n < 2 or not self.size > 0:
            raise ValueError("formation needs n >= 2 and positive size")

    def goals(self) -> np.ndarray:
        if self.kind in (FormationKind.GATHER_LINE, FormationKind.SEEK_LINE):
            return gather_goals(self.center, self.theta, self.n, self.size)
        if self.kind is FormationKind.ENCLOSE_OPEN:
            return enclose_open_goals(self.center, self.theta, self.n, self.size)
        return enclose_closed_goals(self.center, self.theta, self.n, self.size)

    def goal_velocities(self) -> np.ndarray:
        if self.kind is FormationKind.GATHER_LINE:
            return np.zeros((self.n, 2))
        return np.tile(self.velocity, (self.n, 1))
