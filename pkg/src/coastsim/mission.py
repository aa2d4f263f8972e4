"""Mission orchestration: search pattern, detection, inspection, phases.

The mission runs PreMission -> WideAreaSearch <-> DetailedInspection ->
Retrieval -> Concluded as a deterministic reducer over world events; any other
phase edge is an error. Detection is geometric: the survey vehicle drags a
circular sensor footprint along its ground track, and each not-yet-detected
object gets one Bernoulli trial per pass (entering the footprint starts a
pass, leaving ends it). Reported positions are truth plus Gaussian noise.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import SeededRng

STREAM_DETECTION = 20
STREAM_ENV_SAMPLER = 21

COVERAGE_CELL = 0.25  # grid resolution for swept-area accounting [m]


class IllegalTransition(RuntimeError):
    def __init__(self, source: "MissionPhase", target: "MissionPhase"):
        super().__init__(f"illegal mission transition {source.name} -> {target.name}")
        self.source = source
        self.target = target


class MissionPhase(enum.Enum):
    PRE_MISSION = "pre_mission"
    WIDE_AREA_SEARCH = "wide_area_search"
    DETAILED_INSPECTION = "detailed_inspection"
    RETRIEVAL = "retrieval"
    CONCLUDED = "concluded"


LEGAL_EDGES = frozenset({
    (MissionPhase.PRE_MISSION, MissionPhase.WIDE_AREA_SEARCH),
    (MissionPhase.WIDE_AREA_SEARCH, MissionPhase.DETAILED_INSPECTION),
    (MissionPhase.DETAILED_INSPECTION, MissionPhase.WIDE_AREA_SEARCH),
    (MissionPhase.WIDE_AREA_SEARCH, MissionPhase.RETRIEVAL),
    (MissionPhase.DETAILED_INSPECTION, MissionPhase.RETRIEVAL),
    (MissionPhase.RETRIEVAL, MissionPhase.CONCLUDED),
})


@dataclass(frozen=True)
class SearchArea:
    """Axis-aligned rectangle, south-west corner at (x, y)."""

    x: float
    y: float
    width: float  # east extent [m]
    height: float  # north extent [m]

    def __post_init__(self):
        if self.width <= 0.0 or self.height <= 0.0:
            raise ValueError("search area needs positive width and height")

    def corner(self, name: str) -> np.ndarray:
        e = self.x + self.width
        n = self.y + self.height
        corners = {"sw": (self.x, self.y), "se": (e, self.y),
                   "nw": (self.x, n), "ne": (e, n)}
        if name not in corners:
            raise ValueError(f"unknown corner {name!r}, expected sw/se/nw/ne")
        return np.array(corners[name], dtype=float)


@dataclass
class SearchPattern:
    area: SearchArea
    swath: float  # [m]
    waypoints: list  # ordered boustrophedon vertices, (2,) arrays
    n_legs: int

    def path_length(self) -> float:
        total = 0.0
        for a, b in zip(self.waypoints, self.waypoints[1:]):
            total += float(np.linalg.norm(b - a))
        return total


def generate_lawnmower(area: SearchArea, swath: float,
                       entry: str = "sw") -> SearchPattern:
    """Boustrophedon pattern: ceil(width / swath) legs parallel to the longer
    side, spaced evenly (never more than a swath apart) and inset half a
    spacing from the edges, ordered snake-wise from the entry corner.
    """
    if swath <= 0.0:
        raise ValueError("swath must be positive")
    entry_pt = area.corner(entry)  # validates the corner name

    legs_along_x = area.width >= area.height  # legs run along the longer side
    across = area.height if legs_along_x else area.width
    n_legs = max(1, math.ceil(across / swath))
    spacing = across / n_legs

    if legs_along_x:
        lo, hi = area.x, area.x + area.width
        offsets = [area.y + (i + 0.5) * spacing for i in range(n_legs)]
        make = lambda along, off: np.array([along, off])
        near_start = abs(entry_pt[0] - lo) <= abs(entry_pt[0] - hi)
        near_first = abs(entry_pt[1] - offsets[0]) <= abs(entry_pt[1] - offsets[-1])
    else:
        lo, hi = area.y, area.y + area.height
        offsets = [area.x + (i + 0.5) * spacing for i in range(n_legs)]
        make = lambda along, off: np.array([off, along])
        near_start = abs(entry_pt[1] - lo) <= abs(entry_pt[1] - hi)
        near_first = abs(entry_pt[0] - offsets[0]) <= abs(entry_pt[0] - offsets[-1])

    if not near_first:
        offsets.reverse()
    waypoints = []
    forward = near_start
    for off in offsets:
        ends = (make(lo, off), make(hi, off)) if forward else (make(hi, off), make(lo, off))
        waypoints.extend(ends)
        forward = not forward
    return SearchPattern(area, swath, waypoints, n_legs)


@dataclass
class PlantedObject:
    object_id: str
    position: np.ndarray  # (2,) true location [m]
    object_class: str = "other"  # weapon / clothing / device / other
    detectability_radius: float = 0.0  # extra reach for conspicuous objects [m]

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)


@dataclass
class DetectionEvent:
    object_id: str
    vehicle: str  # which platform made the detection
    t: float
    position: np.ndarray  # reported (noisy) location [m]
    confirmed: bool = False

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)


class SweepSensor:
    """Per-pass Bernoulli detection along a vehicle's ground track.

    An object inside max(footprint, its detectability radius) of the vehicle
    is "in pass"; the single trial for that pass happens on entry. Re-entering
    after leaving grants a fresh trial. Reported positions get isotropic
    Gaussian noise.
    """

    def __init__(self, objects: list[PlantedObject], footprint: float,
                 p_detect: float, position_sigma: float, rng: SeededRng,
                 vehicle: str = "tuv"):
        if not 0.0 <= p_detect <= 1.0:
            raise ValueError(f"p_detect must be a probability, got {p_detect}")
        if footprint <= 0.0:
            raise ValueError("footprint must be positive")
        self.objects = list(objects)
        self.footprint = footprint
        self.p_detect = p_detect
        self.position_sigma = position_sigma
        self.vehicle = vehicle
        self._gen = rng.stream(STREAM_DETECTION)
        self._in_pass: set[str] = set()
        self.detected: dict[str, DetectionEvent] = {}

    def sweep(self, vehicle_pos, t: float) -> list[DetectionEvent]:
        """Advance one step; returns new detections made at this instant."""
        pos = np.asarray(vehicle_pos, dtype=float)
        events = []
        for obj in self.objects:
            if obj.object_id in self.detected:
                continue
            reach = max(self.footprint, obj.detectability_radius)
            inside = float(np.linalg.norm(obj.position - pos)) <= reach
            if inside and obj.object_id not in self._in_pass:
                self._in_pass.add(obj.object_id)
                if self._gen.random() < self.p_detect:
                    reported = obj.position + self.position_sigma * self._gen.standard_normal(2)
                    ev = DetectionEvent(obj.object_id, self.vehicle, t, reported)
                    self.detected[obj.object_id] = ev
                    events.append(ev)
            elif not inside:
                self._in_pass.discard(obj.object_id)
        return events


@dataclass
class MissionState:
    phase: MissionPhase = MissionPhase.PRE_MISSION
    entered_at: float = 0.0
    queue: list = field(default_factory=list)  # pending DetectionEvents
    current_target: Optional[DetectionEvent] = None
    pattern_complete: bool = False


@dataclass
class WorldEvents:
    """One step's worth of facts the reducer decides on."""

    t: float
    deployment_complete: bool = False
    at_leg_boundary: bool = False
    pattern_complete: bool = False
    new_detections: list = field(default_factory=list)
    target_processed: bool = False  # current inspection confirmed or abandoned
    vehicles_recovered: bool = False
    reference_position: Optional[np.ndarray] = None  # for nearest-first pick


def transition(state: MissionState, target: MissionPhase, t: float) -> MissionState:
    """Move to a new phase; anything off the legal edge list raises."""
    if (state.phase, target) not in LEGAL_EDGES:
        raise IllegalTransition(state.phase, target)
    return dataclasses.replace(state, phase=target, entered_at=t)


def _pop_nearest(queue: list, reference) -> DetectionEvent:
    ref = np.asarray(reference, dtype=float) if reference is not None else None
    if ref is None:
        return queue.pop(0)
    idx = min(range(len(queue)),
              key=lambda i: float(np.linalg.norm(queue[i].position - ref)))
    return queue.pop(idx)


def mission_step(state: MissionState, ev: WorldEvents) -> MissionState:
    """Deterministic phase reducer; returns the (possibly unchanged) state."""
    state = dataclasses.replace(
        state, queue=state.queue + list(ev.new_detections),
        pattern_complete=state.pattern_complete or ev.pattern_complete)

    if state.phase is MissionPhase.PRE_MISSION:
        if ev.deployment_complete:
            return transition(state, MissionPhase.WIDE_AREA_SEARCH, ev.t)
        return state

    if state.phase is MissionPhase.WIDE_AREA_SEARCH:
        # inspect queued contacts at leg boundaries (or when the pattern is
        # done); nearest contact first
        boundary = ev.at_leg_boundary or state.pattern_complete
        if state.queue and boundary:
            state = transition(state, MissionPhase.DETAILED_INSPECTION, ev.t)
            target = _pop_nearest(state.queue, ev.reference_position)
            return dataclasses.replace(state, current_target=target)
        if state.pattern_complete and not state.queue:
            return transition(state, MissionPhase.RETRIEVAL, ev.t)
        return state

    if state.phase is MissionPhase.DETAILED_INSPECTION:
        if not ev.target_processed:
            return state
        state = dataclasses.replace(state, current_target=None)
        if state.queue:
            target = _pop_nearest(state.queue, ev.reference_position)
            return dataclasses.replace(state, current_target=target)
        if state.pattern_complete:
            return transition(state, MissionPhase.RETRIEVAL, ev.t)
        return transition(state, MissionPhase.WIDE_AREA_SEARCH, ev.t)

    if state.phase is MissionPhase.RETRIEVAL:
        if ev.vehicles_recovered:
            return transition(state, MissionPhase.CONCLUDED, ev.t)
        return state

    return state  # concluded: terminal


@dataclass
class EnvironmentalSample:
    t: float
    position: np.ndarray
    temperature: float  # [deg C]
    turbidity: float  # [NTU]
    salinity: float  # [PSU]

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)


class EnvironmentalSampler:
    """Synthetic water-quality logger: smooth spatial gradients plus noise,
    sampled at a fixed cadence in every phase until the mission concludes."""

    def __init__(self, rng: SeededRng, cadence: float = 5.0,
                 temperature_base: float = 18.0, temperature_gradient=(0.005, 0.0),
                 turbidity_base: float = 5.0, turbidity_gradient=(0.0, 0.01),
                 salinity_base: float = 33.0, salinity_gradient=(0.0, 0.0),
                 noise_sigma: float = 0.05):
        if cadence <= 0.0:
            raise ValueError("sampler cadence must be positive")
        self.cadence = cadence
        self.temperature_base = temperature_base
        self.temperature_gradient = np.asarray(temperature_gradient, dtype=float)
        self.turbidity_base = turbidity_base
        self.turbidity_gradient = np.asarray(turbidity_gradient, dtype=float)
        self.salinity_base = salinity_base
        self.salinity_gradient = np.asarray(salinity_gradient, dtype=float)
        self.noise_sigma = noise_sigma
        self._gen = rng.stream(STREAM_ENV_SAMPLER)
        self._last_sample_t: Optional[float] = None

    def maybe_sample(self, t: float, position) -> Optional[EnvironmentalSample]:
        if self._last_sample_t is not None and t - self._last_sample_t < self.cadence - 1e-9:
            return None
        self._last_sample_t = t
        pos = np.asarray(position, dtype=float)
        noise = self._gen.standard_normal(3) * self.noise_sigma
        return EnvironmentalSample(
            t, pos,
            temperature=self.temperature_base + float(self.temperature_gradient @ pos) + noise[0],
            turbidity=max(0.0, self.turbidity_base + float(self.turbidity_gradient @ pos) + noise[1]),
            salinity=self.salinity_base + float(self.salinity_gradient @ pos) + noise[2])


def coverage_report(track: np.ndarray, swath: float, active_time: float,
                    detections: int = 0, confirmations: int = 0) -> dict:
    """Swept-area metrics for a ground track.

    The searched area is the union of swath-wide corridors around the track
    segments, measured on a 0.25 m occupancy grid (cell centres within half a
    swath of any segment count). Raises on an empty track.
    """
    pts = np.asarray(track, dtype=float)
    if pts.ndim != 2 or len(pts) == 0:
        raise ValueError("empty run log: no track points to report on")
    if swath <= 0.0 or active_time <= 0.0:
        raise ValueError("swath and active_time must be positive")

    seg_a = pts[:-1]
    seg_b = pts[1:]
    lengths = np.linalg.norm(seg_b - seg_a, axis=1)
    distance = float(lengths.sum())

    half = 0.5 * swath
    cell = COVERAGE_CELL
    x_min = pts[:, 0].min() - half
    x_max = pts[:, 0].max() + half
    y_min = pts[:, 1].min() - half
    y_max = pts[:, 1].max() + half
    nx = max(1, int(math.ceil((x_max - x_min) / cell)))
    ny = max(1, int(math.ceil((y_max - y_min) / cell)))
    covered = np.zeros((nx, ny), dtype=bool)

    keep = lengths > 1e-12
    segments = list(zip(seg_a[keep], seg_b[keep], lengths[keep]))
    if not segments:
        segments = [(pts[0], pts[0] + 1e-9, 1e-9)]
    for a, b, length in segments:
        lo_x = max(0, int((min(a[0], b[0]) - half - x_min) / cell) - 1)
        hi_x = min(nx, int((max(a[0], b[0]) + half - x_min) / cell) + 2)
        lo_y = max(0, int((min(a[1], b[1]) - half - y_min) / cell) - 1)
        hi_y = min(ny, int((max(a[1], b[1]) + half - y_min) / cell) + 2)
        if lo_x >= hi_x or lo_y >= hi_y:
            continue
        xs = x_min + (np.arange(lo_x, hi_x) + 0.5) * cell
        ys = y_min + (np.arange(lo_y, hi_y) + 0.5) * cell
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        d = b - a
        tpar = ((gx - a[0]) * d[0] + (gy - a[1]) * d[1]) / (length * length)
        tpar = np.clip(tpar, 0.0, 1.0)
        dist2 = (gx - (a[0] + tpar * d[0])) ** 2 + (gy - (a[1] + tpar * d[1])) ** 2
        covered[lo_x:hi_x, lo_y:hi_y] |= dist2 <= half * half

    area = float(covered.sum()) * cell * cell
    return {
        "area_searched": area,  # [m^2]
        "area_per_hour": area * 3600.0 / active_time,  # [m^2/h]
        "distance_traveled": distance,  # [m]
        "detections": detections,
        "confirmations": confirmations,
    }
