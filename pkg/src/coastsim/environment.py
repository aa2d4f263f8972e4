"""Environmental disturbances and the seabed terrain map.

Wind acts on the surface vehicle as a quadratic drag on the air-relative
velocity, with a first-order Gauss-Markov gust riding on the mean speed.
Waves enter as a zero-mean sinusoidal sway force and yaw moment scaled by
wave height. Current is not a force: it offsets the water-relative velocity
inside the linear damping term (and the towed body's drag terms), so both
vehicles feel it consistently. A scenario with every field zeroed produces
exactly zero disturbance wrench, bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .asv import BodyWrench, VehicleState3DOF, ZERO_WRENCH
from .core import SeededRng, rotate_body_to_nav, rotate_nav_to_body

STREAM_GUST = 10

RHO_AIR = 1.225  # [kg/m^3]

SAND = "sand"
ROCK = "rock"
MUD = "mud"
TERRAIN_CLASSES = (SAND, ROCK, MUD)
_CHAR_TO_CLASS = {"s": SAND, "r": ROCK, "m": MUD}


class OutOfBounds(ValueError):
    """Queried a point outside the terrain map."""


@dataclass
class DisturbanceField:
    mean_wind_speed: float = 0.0  # [m/s]
    wind_direction: float = 0.0  # direction the air moves toward [rad]
    gust_tau: float = 10.0  # gust correlation time [s]
    gust_fraction: float = 0.1  # gust sigma as a fraction of the mean speed
    wind_cw_aw: float = 0.4  # drag coefficient times windage area [m^2]
    wave_height: float = 0.0  # [m]
    wave_period: float = 4.0  # [s]
    wave_sway_gain: float = 8.0  # sway force per metre of wave height [N/m]
    wave_yaw_gain: float = 4.0  # yaw moment per metre of wave height [N m/m]
    current_speed: float = 0.0  # [m/s]
    current_direction: float = 0.0  # direction the water moves toward [rad]

    def is_calm(self) -> bool:
        return (self.mean_wind_speed == 0.0 and self.wave_height == 0.0
                and self.current_speed == 0.0)

    def current_nav(self) -> np.ndarray:
        """Water velocity in the navigation frame."""
        return self.current_speed * np.array(
            [math.cos(self.current_direction), math.sin(self.current_direction)])


class GustProcess:
    """First-order Gauss-Markov perturbation on the mean wind speed.

    Exact discretization: g_{k+1} = a g_k + sigma sqrt(1 - a^2) xi with
    a = exp(-dt / tau), which keeps the stationary variance at sigma^2 for
    any step size.
    """

    def __init__(self, field: DisturbanceField, rng: SeededRng):
        self.tau = field.gust_tau
        self.sigma = field.gust_fraction * field.mean_wind_speed
        self._gen = rng.stream(STREAM_GUST)
        self.value = 0.0

    def step(self, dt: float) -> float:
        if self.sigma == 0.0:
            return 0.0
        a = math.exp(-dt / self.tau)
        self.value = a * self.value \
            + self.sigma * math.sqrt(1.0 - a * a) * self._gen.standard_normal()
        return self.value


def disturbance_wrench(fld: DisturbanceField, state: VehicleState3DOF,
                       t: float, gust_value: float = 0.0) -> BodyWrench:
    """Wind and wave wrench on the surface vehicle at time t.

    Current is deliberately absent here; it belongs in the damping term.
    """
    if fld.is_calm():
        return ZERO_WRENCH

    X = Y = N = 0.0
    wind_speed = max(0.0, fld.mean_wind_speed + gust_value)
    if wind_speed > 0.0:
        wind_nav = wind_speed * np.array(
            [math.cos(fld.wind_direction), math.sin(fld.wind_direction)])
        vel_nav = rotate_body_to_nav([state.u, state.v], state.psi)
        rel = rotate_nav_to_body(wind_nav - vel_nav, state.psi)
        mag = math.hypot(rel[0], rel[1])
        X += 0.5 * RHO_AIR * fld.wind_cw_aw * mag * rel[0]
        Y += 0.5 * RHO_AIR * fld.wind_cw_aw * mag * rel[1]

    if fld.wave_height > 0.0:
        phase = 2.0 * math.pi * t / fld.wave_period
        Y += fld.wave_sway_gain * fld.wave_height * math.sin(phase)
        N += fld.wave_yaw_gain * fld.wave_height * math.sin(phase + math.pi / 3.0)

    return BodyWrench(X, Y, N)


@dataclass
class DampingCoeffs:
    """Linear hydrodynamic damping; zero by default so the bare rigid-body
    model stays conservative, configured per scenario for realistic hulls."""

    d11: float = 0.0  # surge [N s/m]
    d22: float = 0.0  # sway [N s/m]
    d33: float = 0.0  # yaw [N m s/rad]


def damping_wrench(state: VehicleState3DOF, coeffs: DampingCoeffs,
                   current_nav=None) -> BodyWrench:
    """Damping on the water-relative velocity (current enters here)."""
    u_rel, v_rel = state.u, state.v
    if current_nav is not None:
        cur_body = rotate_nav_to_body(current_nav, state.psi)
        u_rel -= cur_body[0]
        v_rel -= cur_body[1]
    return BodyWrench(-coeffs.d11 * u_rel, -coeffs.d22 * v_rel, -coeffs.d33 * state.r)


class TerrainMap:
    """Rectangular grid of terrain classes with a per-class depth table.

    Cells are half-open squares: a point maps to the cell containing it with
    the lower edge inclusive, so lookups are unambiguous on interior
    boundaries. Row 0 of the grid is the northernmost (largest y) row, the
    way the text file reads.
    """

    def __init__(self, grid: list[list[str]], cell_size: float,
                 origin=(0.0, 0.0), depths: dict | None = None):
        if not grid or not grid[0]:
            raise ValueError("terrain grid must be non-empty")
        width = len(grid[0])
        for row in grid:
            if len(row) != width:
                raise ValueError("terrain grid rows must have equal length")
            for cell in row:
                if cell not in TERRAIN_CLASSES:
                    raise ValueError(f"unknown terrain class {cell!r}")
        if cell_size <= 0.0:
            raise ValueError("cell_size must be positive")
        self.grid = grid
        self.cell_size = float(cell_size)
        self.origin = np.asarray(origin, dtype=float)
        self.depths = {SAND: 5.0, ROCK: 6.0, MUD: 4.0}
        if depths:
            self.depths.update(depths)

    @property
    def n_rows(self) -> int:
        return len(self.grid)

    @property
    def n_cols(self) -> int:
        return len(self.grid[0])

    def terrain_at(self, point) -> tuple[str, float]:
        """(terrain class, depth) at a navigation-frame point."""
        p = np.asarray(point, dtype=float)
        col = math.floor((p[0] - self.origin[0]) / self.cell_size)
        row_from_south = math.floor((p[1] - self.origin[1]) / self.cell_size)
        row = self.n_rows - 1 - row_from_south
        if not (0 <= col < self.n_cols and 0 <= row < self.n_rows):
            raise OutOfBounds(
                f"point ({p[0]:.3f}, {p[1]:.3f}) outside terrain map")
        cls = self.grid[row][col]
        return cls, self.depths[cls]

    @classmethod
    def uniform(cls, terrain: str, extent: float = 1000.0,
                origin=(-500.0, -500.0), depth: float | None = None) -> "TerrainMap":
        """Single-cell map covering a square region, for featureless scenarios."""
        m = cls([[terrain]], cell_size=extent, origin=origin)
        if depth is not None:
            m.depths[terrain] = depth
        return m


def load_terrain(path) -> TerrainMap:
    """Read a terrain map from a plain-text grid file.

    Format: 'key: value' header lines (cell_size, origin, depths), then a
    'grid:' line followed by one row of s/r/m characters per line, first
    line being the northernmost row. '#' lines are comments.
    """
    cell_size = None
    origin = (0.0, 0.0)
    depths: dict[str, float] = {}
    rows: list[list[str]] = []
    in_grid = False
    with open(path, encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if in_grid:
                try:
                    rows.append([_CHAR_TO_CLASS[ch] for ch in line])
                except KeyError as exc:
                    raise ValueError(
                        f"{path}:{lineno}: unknown terrain character {exc.args[0]!r}"
                    ) from None
                continue
            if line == "grid:":
                in_grid = True
                continue
            key, _, value = line.partition(":")
            key, value = key.strip(), value.strip()
            if key == "cell_size":
                cell_size = float(value)
            elif key == "origin":
                parts = value.split()
                if len(parts) != 2:
                    raise ValueError(f"{path}:{lineno}: origin needs two numbers")
                origin = (float(parts[0]), float(parts[1]))
            elif key == "depths":
                for item in value.split():
                    ch, _, depth = item.partition("=")
                    if ch not in _CHAR_TO_CLASS:
                        raise ValueError(f"{path}:{lineno}: unknown class {ch!r}")
                    depths[_CHAR_TO_CLASS[ch]] = float(depth)
            else:
                raise ValueError(f"{path}:{lineno}: unknown header key {key!r}")
    if cell_size is None:
        raise ValueError(f"{path}: missing cell_size header")
    if not rows:
        raise ValueError(f"{path}: missing grid rows")
    return TerrainMap(rows, cell_size, origin, depths)
