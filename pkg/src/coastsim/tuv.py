"""Towed underwater vehicle: point mass with a depressor hydrofoil on an
elastic towline.

The body lives in a 3D navigation frame with z positive DOWN (z = 0 is the
surface, the body never rises above it). Hydrodynamic loads are computed from
the flow-relative velocity: foil lift and drag on the reference area plus a
bluff-body drag term, with lift fixed as a depressor (pushes the body deeper).
The towline is a massless tension-only spring-damper; its reaction on the
towing vehicle is exactly the negative of the force applied here.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .core import IntegrationFault

G = 9.81  # [m/s^2]
MAX_CABLE_LENGTH = 30.0  # physical cable on the winch drum [m]

Z_HAT = np.array([0.0, 0.0, 1.0])  # down


class DegenerateGeometry(ValueError):
    """Towline endpoints coincide; the line direction is undefined."""


@dataclass
class TuvParams:
    m_b: float = 12.0  # dry mass [kg]
    added_mass: float = 3.0  # scalar hydrodynamic added mass [kg]
    rho: float = 1025.0  # water density [kg/m^3]
    foil_area: float = 0.1  # hydrofoil reference area S [m^2]
    c_lift: float = 0.2  # foil lift coefficient
    c_drag: float = 0.08  # foil drag coefficient
    bluff_cda: float = 0.01  # hull drag area Cd*A [m^2]
    buoyancy_fraction: float = 0.98  # buoyancy / weight; < 1 sinks when still

    def __post_init__(self):
        if self.m_b <= 0.0 or self.added_mass < 0.0:
            raise ValueError("towed-body masses must be positive")
        if self.buoyancy_fraction < 0.0:
            raise ValueError("buoyancy_fraction must be non-negative")

    @property
    def total_mass(self) -> float:
        return self.m_b + self.added_mass

    @property
    def net_weight(self) -> float:
        """Submerged weight, positive down [N]."""
        return self.m_b * G * (1.0 - self.buoyancy_fraction)


@dataclass
class Towline:
    unstretched_length: float = 30.0  # deployed length L0 [m]
    stiffness: float = 800.0  # [N/m]
    damping: float = 50.0  # stretch-rate damping [N s/m]
    max_slew_rate: float = 0.5  # winch payout/haul speed limit [m/s]

    def __post_init__(self):
        _check_cable_length(self.unstretched_length)
        if self.stiffness <= 0.0 or self.damping < 0.0:
            raise ValueError("towline stiffness must be positive, damping non-negative")


def _check_cable_length(length: float):
    if not 0.0 < length <= MAX_CABLE_LENGTH:
        raise ValueError(
            f"cable length {length} m outside (0, {MAX_CABLE_LENGTH}] m")


@dataclass
class TowedBodyState:
    position: np.ndarray  # (3,) nav frame, z down [m]
    velocity: np.ndarray  # (3,) [m/s]

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.velocity = np.asarray(self.velocity, dtype=float)


def towline_tension(asv_attach: np.ndarray, tuv_attach: np.ndarray,
                    separation_rate: float, line: Towline) -> np.ndarray:
    """Force the line exerts on the towed body (pulls toward the tow point).

    separation_rate is d|asv - tuv|/dt, positive while the line stretches;
    the damping term only ever adds tension, and a slack line (separation at
    or below the unstretched length) carries none: a cable cannot push.
    """
    offset = np.asarray(asv_attach, dtype=float) - np.asarray(tuv_attach, dtype=float)
    s = float(np.linalg.norm(offset))
    if s == 0.0:
        raise DegenerateGeometry("towline endpoints coincide")
    if s <= line.unstretched_length:
        return np.zeros(3)
    magnitude = line.stiffness * (s - line.unstretched_length) \
        + line.damping * max(0.0, separation_rate)
    return (magnitude / s) * offset


def separation_rate(asv_attach, asv_attach_vel, tuv_attach, tuv_attach_vel) -> float:
    """Rate of change of the attachment separation (positive = stretching)."""
    offset = np.asarray(asv_attach, dtype=float) - np.asarray(tuv_attach, dtype=float)
    s = float(np.linalg.norm(offset))
    if s == 0.0:
        return 0.0
    rel_vel = np.asarray(asv_attach_vel, dtype=float) - np.asarray(tuv_attach_vel, dtype=float)
    return float(offset @ rel_vel) / s


def hydrofoil_forces(v_rel: np.ndarray, params: TuvParams
                     ) -> tuple[float, float, np.ndarray]:
    """(lift magnitude, drag magnitude, total foil force vector).

    v_rel is the body velocity relative to the water. Drag opposes v_rel;
    lift is perpendicular to it in the vertical plane containing the flow,
    signed downward (depressor). Purely vertical flow leaves the lift
    direction undefined, so lift is zero there.
    """
    v = np.asarray(v_rel, dtype=float)
    speed = float(np.linalg.norm(v))
    if speed == 0.0:
        return 0.0, 0.0, np.zeros(3)
    q = 0.5 * params.rho * speed ** 2 * params.foil_area
    lift = q * params.c_lift
    drag = q * params.c_drag
    e_v = v / speed
    force = -drag * e_v
    lift_dir = Z_HAT - (Z_HAT @ e_v) * e_v  # projection of 'down' off the flow
    norm = float(np.linalg.norm(lift_dir))
    if norm > 1e-12:
        force = force + lift * (lift_dir / norm)
    return lift, drag, force


def tuv_derivative(state_vec: np.ndarray, params: TuvParams, tension: np.ndarray,
                   current: np.ndarray) -> np.ndarray:
    """Derivative of the stacked (position, velocity) 6-vector."""
    vel = state_vec[3:6]
    v_rel = vel - current
    _, _, foil = hydrofoil_forces(v_rel, params)
    rel_speed = float(np.linalg.norm(v_rel))
    bluff = -0.5 * params.rho * params.bluff_cda * rel_speed * v_rel
    force = foil + bluff + tension + params.net_weight * Z_HAT
    return np.concatenate([vel, force / params.total_mass])


def tuv_step(state: TowedBodyState, params: TuvParams, tension: np.ndarray,
             current: np.ndarray, dt: float, t: float = 0.0) -> TowedBodyState:
    """One RK4 step with the tension held constant over the step.

    The surface (z = 0) is a hard ceiling: the body is clamped to it and any
    upward velocity there is zeroed.
    """
    x = np.concatenate([state.position, state.velocity])
    k1 = tuv_derivative(x, params, tension, current)
    k2 = tuv_derivative(x + 0.5 * dt * k1, params, tension, current)
    k3 = tuv_derivative(x + 0.5 * dt * k2, params, tension, current)
    k4 = tuv_derivative(x + dt * k3, params, tension, current)
    x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.isfinite(x).all():
        raise IntegrationFault("towed body state diverged", t)
    pos, vel = x[0:3].copy(), x[3:6].copy()
    if pos[2] < 0.0:
        pos[2] = 0.0
        vel[2] = max(vel[2], 0.0)
    return TowedBodyState(pos, vel)


def winch_set_length(line: Towline, commanded_length: float, dt: float) -> Towline:
    """Slew the unstretched length toward a commanded value.

    The winch moves at most max_slew_rate * dt per step; commands outside the
    physical cable range (0, 30] m are errors.
    """
    _check_cable_length(commanded_length)
    step = line.max_slew_rate * dt
    delta = commanded_length - line.unstretched_length
    delta = min(max(delta, -step), step)
    return dataclasses.replace(line, unstretched_length=line.unstretched_length + delta)
