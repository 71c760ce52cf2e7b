"""Double integrator with quadratic drag, integrated with fixed-step RK4.

    r' = v,    v' = u - C_D |v| v,    |u| <= u_max

The input is saturated first and held constant over the step.  With a
saturated input the speed can never exceed sqrt(u_max / C_D); the integrator
preserves that up to round-off, and :func:`step_arrays` projects back onto the
speed ball if round-off ever pushes past it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import AgentState, Vec2, vec2


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class ControlInput:
    u: Vec2
    bound: float

    def __post_init__(self) -> None:
        if not self.bound > 0:
            raise ValueError("control bound must be positive")
        object.__setattr__(self, "u", saturate(self.u, self.bound))


def saturate(u, bound: float) -> Vec2:
    """Project ``u`` onto the ball of radius ``bound``; direction is preserved."""
    u = np.asarray(u, dtype=float)
    n = float(np.hypot(u[0], u[1]))
    if n <= bound:
        return vec2(u)
    return vec2(u * (bound / n))


def saturate_rows(u: np.ndarray, bound: float) -> np.ndarray:
    """Row-wise :func:`saturate` for an ``(n, 2)`` array."""
    n = np.hypot(u[:, 0], u[:, 1])
    scale = np.where(n > bound, bound / np.maximum(n, 1e-300), 1.0)
    return u * scale[:, None]


def _accel(v: np.ndarray, u: np.ndarray, c_d: float) -> np.ndarray:
    speed = np.hypot(v[..., 0], v[..., 1])[..., None]
    return u - c_d * speed * v


def step_arrays(r: np.ndarray, v: np.ndarray, u: np.ndarray, dt: float, c_d: float,
                v_max: float | np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """One RK4 step for a batch of agents; ``u`` must already be saturated.

    ``v_max`` (scalar or per-row) enables the round-off guard on the speed ball.
    """
    k1r, k1v = v, _accel(v, u, c_d)
    v2 = v + 0.5 * dt * k1v
    k2r, k2v = v2, _accel(v2, u, c_d)
    v3 = v + 0.5 * dt * k2v
    k3r, k3v = v3, _accel(v3, u, c_d)
    v4 = v + dt * k3v
    k4r, k4v = v4, _accel(v4, u, c_d)
    r_new = r + dt / 6.0 * (k1r + 2 * k2r + 2 * k3r + k4r)
    v_new = v + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
    if not (np.all(np.isfinite(r_new)) and np.all(np.isfinite(v_new))):
        raise IntegrationError("non-finite state after integration step")
    if v_max is not None:
        s = np.hypot(v_new[..., 0], v_new[..., 1])
        vm = np.broadcast_to(np.asarray(v_max, dtype=float), s.shape)
        over = s >= vm
        if np.any(over):
            factor = np.where(over, vm * (1.0 - 1e-12) / np.maximum(s, 1e-300), 1.0)
            v_new = v_new * factor[..., None]
    return r_new, v_new


def step(state: AgentState, u: ControlInput, dt: float, c_d: float) -> AgentState:
    """Advance one agent by ``dt`` under the (already saturated) input ``u``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    r, v = np.asarray(state.r, float), np.asarray(state.v, float)
    if not (np.all(np.isfinite(r)) and np.all(np.isfinite(v))):
        raise IntegrationError("non-finite state before integration step")
    v_max = np.sqrt(u.bound / c_d)
    r_new, v_new = step_arrays(r, v, np.asarray(u.u, float), dt, c_d, v_max)
    return AgentState(r_new, v_new)
