"""Surface vehicle model: planar 3-DOF rigid body with differential thrust.

State is (x, y, psi) pose in the navigation frame and (u, v, r) body-frame
velocities (surge, sway, yaw rate). The mass matrix is diagonal (surge and
sway include added mass, yaw lumps inertia) and the velocity coupling matrix
is skew-symmetric, so the free vehicle conserves kinetic energy. Heave, roll
and pitch are carried as inert zeros purely so logged records have the full
6-DOF layout.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .core import IntegrationFault, wrap_angle

# indices into the 6-state array used by the integrator and the estimator
IX, IY, IPSI, IU, IV, IR = range(6)


@dataclass
class AsvParams:
    m11: float = 50.0  # surge mass incl. added mass [kg]
    m22: float = 60.0  # sway mass incl. added mass [kg]
    m33: float = 20.0  # yaw inertia [kg m^2]
    thruster_half_spacing: float = 0.35  # lateral offset of each thruster [m]
    max_thrust: float = 40.0  # per-motor thrust limit [N]

    def __post_init__(self):
        for name in ("m11", "m22", "m33"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.thruster_half_spacing <= 0.0:
            raise ValueError("thruster_half_spacing must be positive")
        if self.max_thrust <= 0.0:
            raise ValueError("max_thrust must be positive")


@dataclass(frozen=True)
class BodyWrench:
    """Generalized body-frame force (X surge [N], Y sway [N], N yaw [N m])."""

    X: float = 0.0
    Y: float = 0.0
    N: float = 0.0

    def __add__(self, other: "BodyWrench") -> "BodyWrench":
        return BodyWrench(self.X + other.X, self.Y + other.Y, self.N + other.N)


ZERO_WRENCH = BodyWrench()


@dataclass
class VehicleState3DOF:
    x: float = 0.0  # east [m]
    y: float = 0.0  # north [m]
    psi: float = 0.0  # heading [rad]
    u: float = 0.0  # surge speed [m/s]
    v: float = 0.0  # sway speed [m/s]
    r: float = 0.0  # yaw rate [rad/s]
    # inert DOFs, logged but never driven
    z: float = 0.0
    phi: float = 0.0
    theta: float = 0.0
    w: float = 0.0
    p: float = 0.0
    q: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.psi, self.u, self.v, self.r])

    def with_array(self, arr: np.ndarray) -> "VehicleState3DOF":
        return dataclasses.replace(
            self, x=float(arr[IX]), y=float(arr[IY]), psi=wrap_angle(float(arr[IPSI])),
            u=float(arr[IU]), v=float(arr[IV]), r=float(arr[IR]))

    def speed(self) -> float:
        return float(np.hypot(self.u, self.v))


def asv_kinematics(state: np.ndarray) -> np.ndarray:
    """Pose rates (xdot, ydot, psidot) from the 6-state array."""
    psi, u, v, r = state[IPSI], state[IU], state[IV], state[IR]
    c, s = np.cos(psi), np.sin(psi)
    return np.array([u * c - v * s, u * s + v * c, r])


def asv_dynamics(state: np.ndarray, params: AsvParams, wrench: BodyWrench) -> np.ndarray:
    """Body accelerations (udot, vdot, rdot).

    Velocity coupling uses the skew-symmetric matrix
        [[0, -m33 r, m22 v], [m33 r, 0, -m11 u], [-m22 v, m11 u, 0]]
    moved to the right-hand side and divided by the diagonal mass matrix.
    """
    u, v, r = state[IU], state[IV], state[IR]
    udot = (wrench.X + (params.m33 - params.m22) * r * v) / params.m11
    vdot = (wrench.Y + (params.m11 - params.m33) * u * r) / params.m22
    rdot = (wrench.N + (params.m22 - params.m11) * v * u) / params.m33
    return np.array([udot, vdot, rdot])


def asv_derivative(state: np.ndarray, params: AsvParams, wrench: BodyWrench) -> np.ndarray:
    """Full 6-state derivative, shared by the integrator and the estimator."""
    psi, u, v, r = state[IPSI], state[IU], state[IV], state[IR]
    c, s = np.cos(psi), np.sin(psi)
    return np.array([
        u * c - v * s,
        u * s + v * c,
        r,
        (wrench.X + (params.m33 - params.m22) * r * v) / params.m11,
        (wrench.Y + (params.m11 - params.m33) * u * r) / params.m22,
        (wrench.N + (params.m22 - params.m11) * v * u) / params.m33,
    ])


def asv_step(state: VehicleState3DOF, params: AsvParams, wrench: BodyWrench,
             dt: float, t: float = 0.0) -> VehicleState3DOF:
    """Advance the vehicle one RK4 step under a constant body wrench."""
    x = state.as_array()
    k1 = asv_derivative(x, params, wrench)
    k2 = asv_derivative(x + 0.5 * dt * k1, params, wrench)
    k3 = asv_derivative(x + 0.5 * dt * k2, params, wrench)
    k4 = asv_derivative(x + dt * k3, params, wrench)
    x_next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.isfinite(x_next).all():
        raise IntegrationFault("surface vehicle state diverged", t)
    return state.with_array(x_next)


def kinetic_energy(state: VehicleState3DOF, params: AsvParams) -> float:
    return 0.5 * (params.m11 * state.u ** 2 + params.m22 * state.v ** 2
                  + params.m33 * state.r ** 2)


def allocate_differential_thrust(surge_cmd: float, yaw_cmd: float,
                                 params: AsvParams) -> tuple[float, float, BodyWrench]:
    """Map (surge force, yaw moment) commands onto the two stern thrusters.

    Returns (left, right, realized wrench). Each motor saturates at
    +-max_thrust; the realized wrench is recomputed from the clamped pair, so
    saturation shows up honestly in what the dynamics receive.
    """
    half = params.thruster_half_spacing
    left = 0.5 * (surge_cmd - yaw_cmd / half)
    right = 0.5 * (surge_cmd + yaw_cmd / half)
    lim = params.max_thrust
    left = min(max(left, -lim), lim)
    right = min(max(right, -lim), lim)
    return left, right, BodyWrench(X=left + right, Y=0.0, N=(right - left) * half)
