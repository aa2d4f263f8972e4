"""Shared simulation primitives: frames, clock, seeded random streams, RK4.

Conventions used throughout the package:
  - navigation frame: x east, y north, z down (for the underwater vehicle),
    heading psi measured counterclockwise from +x
  - angles in radians, wrapped to (-pi, pi]
  - SI units unless a field comment says otherwise
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

TWO_PI = 2.0 * np.pi


class IntegrationFault(RuntimeError):
    """Raised when a derivative or state stops being finite."""

    def __init__(self, message: str, t: float):
        super().__init__(f"{message} at t={t:.6f} s")
        self.t = t


def wrap_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]; -pi maps to +pi."""
    if not np.isfinite(theta):
        raise ValueError(f"cannot wrap non-finite angle {theta!r}")
    w = theta % TWO_PI  # [0, 2*pi)
    if w > np.pi:
        w -= TWO_PI
    return w


def rotate_body_to_nav(vec, psi: float) -> np.ndarray:
    """Rotate a body-frame 2-vector into the navigation frame."""
    v = np.asarray(vec, dtype=float)
    if not (np.isfinite(v).all() and np.isfinite(psi)):
        raise ValueError("rotate_body_to_nav requires finite inputs")
    c, s = np.cos(psi), np.sin(psi)
    return np.array([c * v[0] - s * v[1], s * v[0] + c * v[1]])


def rotate_nav_to_body(vec, psi: float) -> np.ndarray:
    """Inverse of rotate_body_to_nav."""
    return rotate_body_to_nav(vec, -psi)


@dataclass(frozen=True)
class Frame2D:
    """A planar pose: origin expressed in the parent frame plus a heading."""

    origin: np.ndarray  # (2,) parent-frame position [m]
    heading: float  # [rad], wrapped on construction

    def __post_init__(self):
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float))
        object.__setattr__(self, "heading", wrap_angle(self.heading))

    def to_parent(self, local) -> np.ndarray:
        return self.origin + rotate_body_to_nav(local, self.heading)

    def from_parent(self, point) -> np.ndarray:
        p = np.asarray(point, dtype=float)
        return rotate_nav_to_body(p - self.origin, self.heading)


@dataclass(frozen=True)
class SimClock:
    """Drift-free simulation clock: t is always step_count * dt."""

    dt: float  # fixed step [s]
    step_count: int = 0

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError(f"clock dt must be positive, got {self.dt}")

    @property
    def t(self) -> float:
        return self.step_count * self.dt

    def tick(self) -> "SimClock":
        return SimClock(self.dt, self.step_count + 1)


class SeededRng:
    """Per-consumer random streams derived from one master seed.

    Each consumer owns an integer stream id; the underlying generator is
    counter-based (Philox keyed on (seed, stream id)), so identical
    (seed, stream, draw index) always yields the identical value and adding
    a new consumer never perturbs existing streams.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._streams: dict[int, np.random.Generator] = {}

    def stream(self, stream_id: int) -> np.random.Generator:
        sid = int(stream_id)
        if sid not in self._streams:
            key = np.array([self.seed, sid], dtype=np.uint64)
            self._streams[sid] = np.random.Generator(np.random.Philox(key=key))
        return self._streams[sid]


def rk4_step(f: Callable[[float, np.ndarray], np.ndarray], t: float,
             x: np.ndarray, dt: float) -> np.ndarray:
    """One classical Runge-Kutta 4 step of xdot = f(t, x)."""
    k1 = f(t, x)
    k2 = f(t + 0.5 * dt, x + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, x + 0.5 * dt * k2)
    k4 = f(t + dt, x + dt * k3)
    x_next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.isfinite(x_next).all():
        raise IntegrationFault("non-finite state after RK4 step", t)
    return x_next
