"""Six-legged seabed robot: leg kinematics, tripod gait, crab-walk body motion.

Each leg is a yaw joint about the vertical (theta1) followed by a planar
two-link chain in the resulting vertical plane: theta3 pitches the first link
of length l1 at the base, theta2 is the angle between the links (the acos
branch of the inverse solution, so theta2 in [0, pi] is the one legal elbow).
Leg-frame convention: x radially outward from the mount, z up, foot positions
below the body have negative z.

Body motion is kinematic: commanded terrain speed is achieved exactly and the
gait trajectories exist so the walk is joint-consistent, with stance feet
drifting backward through the body frame while the body advances.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import Frame2D, wrap_angle

log = logging.getLogger(__name__)

PI = math.pi
TRIPOD_A = (0, 2, 4)  # front-left, mid-right, rear-left
TRIPOD_B = (1, 3, 5)

STANCE = "stance"
SWING = "swing"

# relative tolerance on the reach test: wide enough to absorb the rounding of
# a forward-kinematics product, far below any meaningful workspace margin
_REACH_TOL = 1e-14


class WorkspaceViolation(ValueError):
    def __init__(self, message: str, radius: float):
        super().__init__(message)
        self.radius = radius


class JointLimitError(ValueError):
    def __init__(self, joint: str, value: float, limits: tuple[float, float]):
        super().__init__(
            f"{joint} = {value:.6f} rad outside [{limits[0]:.6f}, {limits[1]:.6f}]")
        self.joint = joint


class GaitPhaseError(ValueError):
    """Asked for a foot position outside the phase's time window."""


class StaticStabilityWarning(UserWarning):
    """Tripod gait with duty factor below 0.5 cannot keep three feet down."""


@dataclass
class LegGeometry:
    l1: float = 0.08  # first link length [m]
    l2: float = 0.12  # second link length [m]
    theta1_limits: tuple[float, float] = (-PI, PI)
    theta2_limits: tuple[float, float] = (-PI / 2, PI / 2)
    theta3_limits: tuple[float, float] = (-PI / 2, PI / 2)

    def __post_init__(self):
        if self.l1 <= 0.0 or self.l2 <= 0.0:
            raise ValueError("link lengths must be positive")

    @property
    def reach_min(self) -> float:
        return abs(self.l1 - self.l2)

    @property
    def reach_max(self) -> float:
        return self.l1 + self.l2


@dataclass(frozen=True)
class LegConfiguration:
    theta1: float  # yaw about vertical [rad]
    theta2: float  # inter-link (elbow) angle [rad]
    theta3: float  # base pitch of the first link [rad]


def _check_limit(name: str, value: float, limits: tuple[float, float]):
    if not limits[0] <= value <= limits[1]:
        raise JointLimitError(name, value, limits)


def leg_fk(cfg: LegConfiguration, geom: LegGeometry) -> np.ndarray:
    """Foot position in the leg frame from joint angles."""
    reach = geom.l1 * math.cos(cfg.theta3) \
        + geom.l2 * math.cos(cfg.theta3 + cfg.theta2)
    z = geom.l1 * math.sin(cfg.theta3) \
        + geom.l2 * math.sin(cfg.theta3 + cfg.theta2)
    return np.array([reach * math.cos(cfg.theta1),
                     reach * math.sin(cfg.theta1), z])


def leg_ik(p, geom: LegGeometry) -> LegConfiguration:
    """Joint angles reaching a leg-frame point, elbow branch from the
    principal acos value.

    Raises WorkspaceViolation outside the reachable annulus and
    JointLimitError when the solution breaches a configured limit.
    """
    x, y, z = float(p[0]), float(p[1]), float(p[2])
    d = math.hypot(x, y)
    r = math.hypot(d, z)
    arg = (d * d + z * z - geom.l1 ** 2 - geom.l2 ** 2) / (2.0 * geom.l1 * geom.l2)
    if arg > 1.0 + _REACH_TOL or arg < -1.0 - _REACH_TOL:
        raise WorkspaceViolation(
            f"target radius {r:.9f} m outside [{geom.reach_min:.9f}, "
            f"{geom.reach_max:.9f}] m", radius=r)
    arg = min(max(arg, -1.0), 1.0)
    theta1 = math.atan2(y, x)
    theta2 = math.acos(arg)
    theta3 = wrap_angle(math.atan2(z, d)
                        - math.atan2(geom.l2 * math.sin(theta2),
                                     geom.l1 + geom.l2 * math.cos(theta2)))
    _check_limit("theta1", theta1, geom.theta1_limits)
    _check_limit("theta2", theta2, geom.theta2_limits)
    _check_limit("theta3", theta3, geom.theta3_limits)
    return LegConfiguration(theta1, theta2, theta3)


@dataclass(frozen=True)
class GaitPhase:
    """One leg's current gait cycle: stance then swing."""

    leg: int
    p0: np.ndarray  # foot position at stance start, leg frame [m]
    v_stance: np.ndarray  # foot velocity during stance [m/s]
    v_swing: np.ndarray  # foot velocity during swing [m/s]
    t_start: float  # cycle start time [s]
    period: float  # full cycle duration [s]
    duty_factor: float  # stance fraction of the cycle

    def __post_init__(self):
        object.__setattr__(self, "p0", np.asarray(self.p0, dtype=float))
        object.__setattr__(self, "v_stance", np.asarray(self.v_stance, dtype=float))
        object.__setattr__(self, "v_swing", np.asarray(self.v_swing, dtype=float))
        if self.period <= 0.0 or not 0.0 < self.duty_factor < 1.0:
            raise ValueError("gait phase needs period > 0 and duty in (0, 1)")

    @property
    def t_end(self) -> float:
        """Stance end / swing start time."""
        return self.t_start + self.duty_factor * self.period


def closed_gait_phase(leg: int, p0, v_stance, t_start: float, period: float,
                      duty_factor: float) -> GaitPhase:
    """GaitPhase whose swing velocity closes the cycle back onto p0."""
    if not 0.0 < duty_factor < 1.0:
        raise ValueError("gait phase needs period > 0 and duty in (0, 1)")
    v_st = np.asarray(v_stance, dtype=float)
    v_sw = -v_st * duty_factor / (1.0 - duty_factor)
    return GaitPhase(leg, p0, v_st, v_sw, t_start, period, duty_factor)


def gait_foot_position(phase: GaitPhase, t: float, h_lift: float = 0.03) -> np.ndarray:
    """Foot position at time t within the phase's cycle window.

    Stance drifts linearly from p0; swing continues from the stance end point
    at the swing velocity plus a parabolic vertical clearance of height h_lift
    (zero at both swing endpoints; pass h_lift=0 for the flat-ground form).
    """
    if not phase.t_start <= t <= phase.t_start + phase.period:
        raise GaitPhaseError(
            f"t={t:.6f} outside cycle [{phase.t_start:.6f}, "
            f"{phase.t_start + phase.period:.6f}]")
    if t <= phase.t_end:
        return phase.p0 + phase.v_stance * (t - phase.t_start)
    stance_end = phase.p0 + phase.v_stance * (phase.t_end - phase.t_start)
    p = stance_end + phase.v_swing * (t - phase.t_end)
    swing_time = phase.period * (1.0 - phase.duty_factor)
    s = (t - phase.t_end) / swing_time
    return p + np.array([0.0, 0.0, h_lift * 4.0 * s * (1.0 - s)])


def tripod_schedule(t: float, period: float, duty_factor: float = 0.5) -> list[str]:
    """Per-leg stance/swing assignment; tripods {0,2,4} and {1,3,5} are in
    anti-phase so at least three feet are down whenever duty >= 0.5."""
    if duty_factor < 0.5:
        warnings.warn(
            f"duty factor {duty_factor} < 0.5 leaves windows with no tripod down",
            StaticStabilityWarning, stacklevel=2)
    out = []
    for leg in range(6):
        offset = 0.0 if leg in TRIPOD_A else 0.5
        tau = (t / period + offset) % 1.0
        out.append(STANCE if tau < duty_factor else SWING)
    return out


# body-frame mount poses: position [m] and outward yaw [rad] per leg
MOUNTS = (
    Frame2D(np.array([0.12, 0.09]), math.radians(45.0)),    # 0 front-left
    Frame2D(np.array([0.12, -0.09]), math.radians(-45.0)),  # 1 front-right
    Frame2D(np.array([0.0, -0.11]), math.radians(-90.0)),   # 2 mid-right
    Frame2D(np.array([0.0, 0.11]), math.radians(90.0)),     # 3 mid-left
    Frame2D(np.array([-0.12, 0.09]), math.radians(135.0)),  # 4 rear-left
    Frame2D(np.array([-0.12, -0.09]), math.radians(-135.0)),  # 5 rear-right
)

DEFAULT_TERRAIN_SPEEDS = {"sand": 0.2, "rock": 0.1, "mud": 0.15}  # [m/s]


@dataclass
class HexapodParams:
    geometry: LegGeometry = field(default_factory=LegGeometry)
    terrain_speeds: dict = field(default_factory=lambda: dict(DEFAULT_TERRAIN_SPEEDS))
    stride: float = 0.08  # body travel per gait cycle [m]
    duty_factor: float = 0.5
    h_lift: float = 0.03  # swing foot clearance [m]
    max_turn_rate: float = 0.3  # [rad/s]
    home_radius: float = 0.16  # nominal foot reach in the leg frame [m]
    home_height: float = -0.06  # nominal foot z in the leg frame [m]

    def speed_for(self, terrain: str) -> float:
        try:
            return self.terrain_speeds[terrain]
        except KeyError:
            raise ValueError(f"no speed configured for terrain {terrain!r}") from None


@dataclass
class HexapodState:
    position: np.ndarray  # (2,) nav frame [m]
    heading: float = 0.0  # [rad]
    terrain: str = "sand"
    gait_t: float = 0.0  # time since walking started [s]
    legs: tuple = ()  # 6x LegConfiguration, filled by body_advance
    faults: int = 0  # count of steps halted by an unreachable foot target

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.heading = wrap_angle(self.heading)


def stand_legs(params: HexapodParams) -> tuple:
    """Joint angles for all feet parked at the home point."""
    home = np.array([params.home_radius, 0.0, params.home_height])
    cfg = leg_ik(home, params.geometry)
    return (cfg,) * 6


def _leg_foot_target(params: HexapodParams, leg: int, gait_t: float,
                     period: float, speed: float) -> np.ndarray:
    """Leg-frame foot target for the current instant of the gait cycle."""
    offset = 0.0 if leg in TRIPOD_A else 0.5
    tau = (gait_t / period + offset) % 1.0
    # stance feet sweep backward through the body at -speed along body x,
    # rotated into this leg's frame; the sweep is centred on the home point
    yaw = MOUNTS[leg].heading
    v_st = np.array([-speed * math.cos(yaw), speed * math.sin(yaw), 0.0])
    home = np.array([params.home_radius, 0.0, params.home_height])
    p0 = home - v_st * (0.5 * params.duty_factor * period)
    phase = closed_gait_phase(leg, p0, v_st, t_start=gait_t - tau * period,
                              period=period, duty_factor=params.duty_factor)
    return gait_foot_position(phase, gait_t, h_lift=params.h_lift)


def body_advance(state: HexapodState, heading_cmd: float, dt: float,
                 params: HexapodParams, speed: float | None = None) -> HexapodState:
    """Advance the walking body one step toward a commanded heading.

    Heading slews toward the command at the turn-rate limit while the body
    moves along its current heading at the terrain speed. If any foot target
    falls outside a leg workspace the gait halts for this step: the body
    stays put and the fault counter increments.
    """
    if speed is None:
        speed = params.speed_for(state.terrain)
    if speed <= 0.0:
        raise ValueError(f"walking speed must be positive, got {speed}")
    period = params.stride / speed

    heading_err = wrap_angle(heading_cmd - state.heading)
    max_step = params.max_turn_rate * dt
    heading = wrap_angle(state.heading + min(max(heading_err, -max_step), max_step))

    gait_t = state.gait_t + dt
    legs = []
    try:
        for leg in range(6):
            target = _leg_foot_target(params, leg, gait_t, period, speed)
            legs.append(leg_ik(target, params.geometry))
    except (WorkspaceViolation, JointLimitError) as exc:
        log.warning("gait halted: leg %d target unreachable (%s)", leg, exc)
        return dataclasses.replace(state, faults=state.faults + 1)

    step = speed * dt
    position = state.position + step * np.array([math.cos(heading), math.sin(heading)])
    return dataclasses.replace(state, position=position, heading=heading,
                               gait_t=gait_t, legs=tuple(legs))


def foot_in_body_frame(params: HexapodParams, leg: int, cfg: LegConfiguration) -> np.ndarray:
    """Body-frame foot position (x, y, z) for a leg configuration."""
    p = leg_fk(cfg, params.geometry)
    xy = MOUNTS[leg].to_parent(p[0:2])
    return np.array([xy[0], xy[1], p[2]])
