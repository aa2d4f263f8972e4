import itertools
import math

import numpy as np
import pytest

from coastsim.core import SeededRng
from coastsim.mission import (COVERAGE_CELL, DetectionEvent,
                              EnvironmentalSampler, IllegalTransition,
                              MissionPhase, MissionState, PlantedObject,
                              SearchArea, SweepSensor, WorldEvents,
                              coverage_report, generate_lawnmower,
                              mission_step, transition)


# --- lawnmower pattern -------------------------------------------------------

def test_lawnmower_square_area_leg_count_and_length():
    # 100 x 100 m at 10 m swath: 10 legs of 100 m plus 9 connectors of 10 m
    area = SearchArea(0.0, 0.0, 100.0, 100.0)
    pattern = generate_lawnmower(area, swath=10.0, entry="sw")
    assert pattern.n_legs == 10
    assert len(pattern.waypoints) == 20
    assert pattern.path_length() == pytest.approx(1090.0, abs=1e-9)
    # snake order from the south-west corner, legs inset half a spacing
    assert np.allclose(pattern.waypoints[0], [0.0, 5.0])
    assert np.allclose(pattern.waypoints[1], [100.0, 5.0])
    assert np.allclose(pattern.waypoints[2], [100.0, 15.0])
    assert np.allclose(pattern.waypoints[3], [0.0, 15.0])


def test_lawnmower_legs_run_along_longer_side():
    tall = generate_lawnmower(SearchArea(0.0, 0.0, 30.0, 90.0), swath=10.0)
    # legs parallel to y: consecutive leg endpoints share x
    first_leg = tall.waypoints[1] - tall.waypoints[0]
    assert first_leg[0] == 0.0 and abs(first_leg[1]) == 90.0
    assert tall.n_legs == 3


def test_lawnmower_starts_near_entry_corner():
    area = SearchArea(-50.0, 20.0, 100.0, 60.0)
    swath = 7.0
    for corner in ("sw", "se", "nw", "ne"):
        pattern = generate_lawnmower(area, swath, entry=corner)
        spacing = 60.0 / pattern.n_legs
        start = pattern.waypoints[0]
        assert np.linalg.norm(start - area.corner(corner)) <= spacing


def test_lawnmower_single_wide_leg():
    pattern = generate_lawnmower(SearchArea(0.0, 0.0, 100.0, 8.0), swath=10.0)
    assert pattern.n_legs == 1
    assert np.allclose(pattern.waypoints[0], [0.0, 4.0])
    assert np.allclose(pattern.waypoints[1], [100.0, 4.0])


def _min_distance_to_path(points, waypoints):
    """Distance from each query point to the nearest path segment."""
    best = np.full(len(points), np.inf)
    for a, b in zip(waypoints, waypoints[1:]):
        d = b - a
        denom = float(d @ d)
        if denom == 0.0:
            proj = np.zeros(len(points))
        else:
            proj = np.clip(((points - a) @ d) / denom, 0.0, 1.0)
        closest = a + proj[:, None] * d
        best = np.minimum(best, np.linalg.norm(points - closest, axis=1))
    return best


def test_lawnmower_covers_every_interior_point():
    rng = np.random.default_rng(13)
    for _ in range(20):
        w = float(rng.uniform(20.0, 120.0))
        h = float(rng.uniform(20.0, 120.0))
        x0 = float(rng.uniform(-50.0, 50.0))
        y0 = float(rng.uniform(-50.0, 50.0))
        swath = float(rng.uniform(5.0, 25.0))
        area = SearchArea(x0, y0, w, h)
        pattern = generate_lawnmower(area, swath)
        xs = np.arange(x0, x0 + w + 1e-9, 1.0)
        ys = np.arange(y0, y0 + h + 1e-9, 1.0)
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        points = np.column_stack([gx.ravel(), gy.ravel()])
        dist = _min_distance_to_path(points, pattern.waypoints)
        assert dist.max() <= swath / 2.0 + 1e-9


def test_lawnmower_validation():
    area = SearchArea(0.0, 0.0, 10.0, 10.0)
    with pytest.raises(ValueError, match="swath"):
        generate_lawnmower(area, swath=0.0)
    with pytest.raises(ValueError, match="corner"):
        generate_lawnmower(area, swath=5.0, entry="north")
    with pytest.raises(ValueError):
        SearchArea(0.0, 0.0, -5.0, 10.0)


# --- phase machine -----------------------------------------------------------

def test_transition_edge_matrix():
    legal = {
        (MissionPhase.PRE_MISSION, MissionPhase.WIDE_AREA_SEARCH),
        (MissionPhase.WIDE_AREA_SEARCH, MissionPhase.DETAILED_INSPECTION),
        (MissionPhase.DETAILED_INSPECTION, MissionPhase.WIDE_AREA_SEARCH),
        (MissionPhase.WIDE_AREA_SEARCH, MissionPhase.RETRIEVAL),
        (MissionPhase.DETAILED_INSPECTION, MissionPhase.RETRIEVAL),
        (MissionPhase.RETRIEVAL, MissionPhase.CONCLUDED),
    }
    for src, dst in itertools.product(MissionPhase, MissionPhase):
        state = MissionState(phase=src)
        if (src, dst) in legal:
            out = transition(state, dst, t=3.0)
            assert out.phase is dst
            assert out.entered_at == 3.0
        else:
            with pytest.raises(IllegalTransition) as err:
                transition(state, dst, t=3.0)
            assert err.value.source is src
            assert err.value.target is dst


def _detection(obj_id, x, y):
    return DetectionEvent(obj_id, "tuv", 0.0, np.array([x, y]))


def test_reducer_full_mission_flow():
    state = MissionState()
    # nothing happens until deployment completes
    state = mission_step(state, WorldEvents(t=1.0))
    assert state.phase is MissionPhase.PRE_MISSION
    state = mission_step(state, WorldEvents(t=5.0, deployment_complete=True))
    assert state.phase is MissionPhase.WIDE_AREA_SEARCH
    assert state.entered_at == 5.0

    # a detection mid-leg queues without interrupting the leg
    det = _detection("obj-1", 40.0, 10.0)
    state = mission_step(state, WorldEvents(t=20.0, new_detections=[det]))
    assert state.phase is MissionPhase.WIDE_AREA_SEARCH
    assert len(state.queue) == 1

    # the leg boundary triggers the inspection detour
    state = mission_step(state, WorldEvents(t=60.0, at_leg_boundary=True))
    assert state.phase is MissionPhase.DETAILED_INSPECTION
    assert state.current_target.object_id == "obj-1"
    assert state.queue == []

    # inspection done, queue empty, pattern unfinished: back to searching
    state = mission_step(state, WorldEvents(t=120.0, target_processed=True))
    assert state.phase is MissionPhase.WIDE_AREA_SEARCH
    assert state.current_target is None

    # pattern completes with nothing queued: retrieval, then conclusion
    state = mission_step(state, WorldEvents(t=500.0, pattern_complete=True))
    assert state.phase is MissionPhase.RETRIEVAL
    state = mission_step(state, WorldEvents(t=520.0))
    assert state.phase is MissionPhase.RETRIEVAL
    state = mission_step(state, WorldEvents(t=560.0, vehicles_recovered=True))
    assert state.phase is MissionPhase.CONCLUDED
    # terminal: further events are absorbed
    state = mission_step(state, WorldEvents(t=600.0, new_detections=[det]))
    assert state.phase is MissionPhase.CONCLUDED


def test_reducer_pops_nearest_detection_first():
    state = MissionState(phase=MissionPhase.WIDE_AREA_SEARCH)
    far = _detection("far", 90.0, 90.0)
    near = _detection("near", 12.0, 8.0)
    state = mission_step(state, WorldEvents(t=10.0, new_detections=[far, near]))
    state = mission_step(state, WorldEvents(
        t=30.0, at_leg_boundary=True, reference_position=np.array([10.0, 10.0])))
    assert state.current_target.object_id == "near"
    assert state.queue[0].object_id == "far"


def test_reducer_chains_queued_inspections():
    state = MissionState(phase=MissionPhase.DETAILED_INSPECTION,
                         current_target=_detection("a", 0.0, 0.0),
                         queue=[_detection("b", 5.0, 5.0)])
    state = mission_step(state, WorldEvents(
        t=50.0, target_processed=True, reference_position=np.array([0.0, 0.0])))
    assert state.phase is MissionPhase.DETAILED_INSPECTION
    assert state.current_target.object_id == "b"


def test_reducer_inspection_to_retrieval_when_pattern_done():
    state = MissionState(phase=MissionPhase.DETAILED_INSPECTION,
                         current_target=_detection("a", 0.0, 0.0),
                         pattern_complete=True)
    state = mission_step(state, WorldEvents(t=300.0, target_processed=True))
    assert state.phase is MissionPhase.RETRIEVAL


def test_reducer_inspects_leftover_queue_after_pattern_complete():
    state = MissionState(phase=MissionPhase.WIDE_AREA_SEARCH,
                         queue=[_detection("late", 1.0, 1.0)])
    state = mission_step(state, WorldEvents(t=400.0, pattern_complete=True))
    assert state.phase is MissionPhase.DETAILED_INSPECTION
    assert state.current_target.object_id == "late"


# --- sweep sensor ------------------------------------------------------------

def test_certain_detection_on_footprint_entry():
    obj = PlantedObject("anchor", np.array([10.0, 0.0]))
    sensor = SweepSensor([obj], footprint=2.0, p_detect=1.0,
                         position_sigma=1.0, rng=SeededRng(8))
    assert sensor.sweep([0.0, 0.0], t=0.0) == []
    events = sensor.sweep([9.0, 0.0], t=4.5)  # entering the footprint
    assert len(events) == 1
    assert events[0].object_id == "anchor"
    assert events[0].t == 4.5
    assert events[0].vehicle == "tuv"
    # reported position is noisy but nearby
    assert np.linalg.norm(events[0].position - obj.position) < 5.0
    # still inside: no second event for an already-detected object
    assert sensor.sweep([10.0, 0.0], t=5.0) == []
    assert "anchor" in sensor.detected


def test_impossible_detection_never_fires():
    obj = PlantedObject("ghost", np.array([0.0, 0.0]))
    sensor = SweepSensor([obj], footprint=5.0, p_detect=0.0,
                         position_sigma=0.5, rng=SeededRng(8))
    for step in range(100):
        assert sensor.sweep([0.0, 0.0], t=float(step)) == []
    assert sensor.detected == {}


def test_one_trial_per_pass_not_per_step():
    # staying inside the footprint after entry must not retry the Bernoulli
    # draw: over many sensors the hit rate stays near p, not near 1
    hits = 0
    n = 400
    for seed in range(n):
        obj = PlantedObject("x", np.array([0.0, 0.0]))
        sensor = SweepSensor([obj], footprint=5.0, p_detect=0.5,
                             position_sigma=0.1, rng=SeededRng(seed))
        for step in range(50):  # 50 steps inside one pass
            sensor.sweep([0.0, 0.0], t=float(step))
        hits += bool(sensor.detected)
    assert 0.40 < hits / n < 0.60


def test_reentry_grants_fresh_trial():
    # p = 0.5: with repeated passes over the object, detection eventually
    # lands even though any single pass may miss
    obj = PlantedObject("wreck", np.array([0.0, 0.0]))
    sensor = SweepSensor([obj], footprint=1.0, p_detect=0.5,
                         position_sigma=0.1, rng=SeededRng(3))
    passes = 0
    for _ in range(64):
        passes += 1
        sensor.sweep([0.0, 0.0], t=0.0)  # inside
        if sensor.detected:
            break
        sensor.sweep([10.0, 0.0], t=1.0)  # leave: pass over
    assert sensor.detected
    assert passes >= 1


def test_detection_frequency_monte_carlo():
    # 1000 single-pass trials at p = 0.7: frequency within [0.67, 0.73]
    objs = [PlantedObject(f"o{i}", np.array([10.0 * i, 0.0])) for i in range(1000)]
    sensor = SweepSensor(objs, footprint=1.0, p_detect=0.7,
                         position_sigma=1.0, rng=SeededRng(17))
    for i in range(1000):
        sensor.sweep([10.0 * i, 0.0], t=float(i))
    freq = len(sensor.detected) / 1000.0
    assert 0.67 <= freq <= 0.73
    # reported-position noise matches the configured sigma
    errors = np.array([sensor.detected[o.object_id].position - o.position
                       for o in objs if o.object_id in sensor.detected])
    assert np.std(errors) == pytest.approx(1.0, rel=0.15)


def test_detectability_radius_extends_reach():
    obj = PlantedObject("buoy", np.array([0.0, 0.0]), detectability_radius=5.0)
    sensor = SweepSensor([obj], footprint=1.0, p_detect=1.0,
                         position_sigma=0.0, rng=SeededRng(1))
    events = sensor.sweep([4.0, 0.0], t=0.0)  # outside footprint, inside reach
    assert len(events) == 1


def test_sensor_validation():
    with pytest.raises(ValueError, match="p_detect"):
        SweepSensor([], footprint=1.0, p_detect=1.5, position_sigma=0.0,
                    rng=SeededRng(1))
    with pytest.raises(ValueError, match="footprint"):
        SweepSensor([], footprint=0.0, p_detect=0.5, position_sigma=0.0,
                    rng=SeededRng(1))


# --- environmental sampler ---------------------------------------------------

def test_sampler_respects_cadence():
    sampler = EnvironmentalSampler(SeededRng(2), cadence=5.0)
    assert sampler.maybe_sample(0.0, [0.0, 0.0]) is not None
    assert sampler.maybe_sample(2.0, [0.0, 0.0]) is None
    assert sampler.maybe_sample(4.999, [0.0, 0.0]) is None
    assert sampler.maybe_sample(5.0, [0.0, 0.0]) is not None


def test_sampler_fields_follow_gradients():
    sampler = EnvironmentalSampler(SeededRng(2), noise_sigma=0.0)
    s = sampler.maybe_sample(0.0, [100.0, 50.0])
    assert s.temperature == pytest.approx(18.0 + 0.005 * 100.0, abs=1e-12)
    assert s.turbidity == pytest.approx(5.0 + 0.01 * 50.0, abs=1e-12)
    assert s.salinity == pytest.approx(33.0, abs=1e-12)
    assert s.t == 0.0


def test_sampler_is_deterministic():
    a = EnvironmentalSampler(SeededRng(9))
    b = EnvironmentalSampler(SeededRng(9))
    sa = a.maybe_sample(0.0, [3.0, 4.0])
    sb = b.maybe_sample(0.0, [3.0, 4.0])
    assert sa.temperature == sb.temperature
    assert sa.turbidity == sb.turbidity
    assert sa.salinity == sb.salinity


# --- coverage metrics --------------------------------------------------------

def test_coverage_straight_line_capsule():
    # 100 m track with 10 m swath: 10 x 100 corridor plus two half-disc caps
    track = np.array([[0.0, 0.0], [100.0, 0.0]])
    report = coverage_report(track, swath=10.0, active_time=1000.0)
    exact = 10.0 * 100.0 + math.pi * 5.0 ** 2
    assert report["area_searched"] == pytest.approx(exact, rel=0.02)
    assert report["distance_traveled"] == pytest.approx(100.0, abs=1e-9)
    assert report["area_per_hour"] == pytest.approx(
        report["area_searched"] * 3.6, abs=1e-9)
    assert report["detections"] == 0


def test_coverage_overlap_not_double_counted():
    # two legs 5 m apart with a 10 m swath overlap heavily; the union is a
    # 15 m-wide corridor, far less than twice the single-leg capsule
    single = coverage_report(np.array([[0.0, 0.0], [100.0, 0.0]]),
                             swath=10.0, active_time=100.0)["area_searched"]
    both = coverage_report(
        np.array([[0.0, 0.0], [100.0, 0.0], [100.0, 5.0], [0.0, 5.0]]),
        swath=10.0, active_time=100.0)["area_searched"]
    assert both < 2.0 * single
    assert both == pytest.approx(15.0 * 100.0 + math.pi * 25.0, rel=0.05)


def test_coverage_single_point_is_a_disc():
    report = coverage_report(np.array([[3.0, 4.0]]), swath=2.0, active_time=10.0)
    assert report["area_searched"] == pytest.approx(math.pi * 1.0, rel=0.05)
    assert report["distance_traveled"] == 0.0


def test_coverage_counts_pass_through():
    report = coverage_report(np.array([[0.0, 0.0], [10.0, 0.0]]),
                             swath=1.0, active_time=100.0,
                             detections=2, confirmations=1)
    assert report["detections"] == 2
    assert report["confirmations"] == 1


def test_coverage_report_validation():
    with pytest.raises(ValueError, match="empty"):
        coverage_report(np.zeros((0, 2)), swath=1.0, active_time=1.0)
    with pytest.raises(ValueError):
        coverage_report(np.array([[0.0, 0.0]]), swath=0.0, active_time=1.0)
    with pytest.raises(ValueError):
        coverage_report(np.array([[0.0, 0.0]]), swath=1.0, active_time=0.0)
