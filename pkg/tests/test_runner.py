import filecmp
import math

import numpy as np
import pytest

from coastsim.runner import (COLUMNS, RunLog, emit_outputs, read_run,
                             run_simulation)
from coastsim.scenario import parse_scenario


def cruise_tree(duration=10.0, dt=0.01, tuv=True, **extra):
    tree = {
        "run": {"seed": 5, "dt": dt, "duration": duration},
        "tuv": {"enabled": tuv},
        "mission": {"kind": "cruise", "heading": 0.0, "speed": 2.0},
    }
    tree.update(extra)
    return tree


def search_tree(duration=900.0, seed=11):
    # small two-leg pattern with one certain object: concludes quickly
    return {
        "run": {"seed": seed, "dt": 0.05, "duration": duration},
        "controllers": {"sensors": {"gyro_rate": 20}},
        "mission": {
            "kind": "search",
            "area": {"x": 0, "y": 0, "width": 40, "height": 20},
            "swath": 10,
            "objects": [{"id": "target-1", "position": [10, 5],
                         "class": "device"}],
        },
    }


def col(log, name):
    i = log.columns.index(name)
    return [row[i] for row in log.rows]


# --- log shape ----------------------------------------------------------------

def test_ten_steps_ten_rows():
    log = run_simulation(parse_scenario(cruise_tree(duration=0.1, dt=0.01)))
    assert len(log.rows) == 10
    assert log.columns == list(COLUMNS)
    assert all(len(row) == len(COLUMNS) for row in log.rows)
    ts = col(log, "t")
    assert ts == pytest.approx([0.01 * k for k in range(10)], abs=1e-12)
    assert log.metrics["steps"] == 10


def test_zero_duration_run_is_empty_but_valid(tmp_path):
    log = run_simulation(parse_scenario(cruise_tree(duration=0.0)))
    assert log.rows == []
    assert log.aborted is False
    assert log.metrics["steps"] == 0
    assert log.metrics["sim_time"] == 0.0
    assert [e["event"] for e in log.events] == ["run_end"]
    # still emits a parseable run directory
    emit_outputs(log, tmp_path)
    back = read_run(tmp_path)
    assert back.rows == [] and back.columns == list(COLUMNS)


def test_zero_duration_search_stays_pre_mission():
    log = run_simulation(parse_scenario(search_tree(duration=0.0)))
    assert log.metrics["final_phase"] == "pre_mission"
    assert log.metrics["concluded"] is False


def test_column_names_are_unique():
    assert len(COLUMNS) == len(set(COLUMNS))
    for name in ("t", "truth_x", "est_psi", "thrust_left", "tension_x",
                 "hex_deployed", "phase", "innov_gps_x"):
        assert name in COLUMNS


def test_disabled_tuv_leaves_blank_columns():
    log = run_simulation(parse_scenario(cruise_tree(duration=0.5, tuv=False)))
    assert set(col(log, "tuv_x")) == {None}
    assert set(col(log, "tension_x")) == {None}
    # hexapod never deploys on a cruise either
    assert set(col(log, "hex_deployed")) == {0}
    assert set(col(log, "hex_leg0_theta1")) == {None}


# --- determinism and serialization ---------------------------------------------

def test_same_seed_byte_identical(tmp_path):
    scn = parse_scenario(search_tree(duration=60.0))
    a, b = tmp_path / "a", tmp_path / "b"
    emit_outputs(run_simulation(scn), a)
    emit_outputs(run_simulation(parse_scenario(search_tree(duration=60.0))), b)
    for name in ("states.csv", "events.jsonl", "metrics.json"):
        assert filecmp.cmp(a / name, b / name, shallow=False), name
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_different_seed_differs():
    log1 = run_simulation(parse_scenario(search_tree(duration=20.0, seed=11)))
    log2 = run_simulation(parse_scenario(search_tree(duration=20.0, seed=12)))
    assert col(log1, "est_x") != col(log2, "est_x")


def test_round_trip_is_exact(tmp_path):
    log = run_simulation(parse_scenario(search_tree(duration=60.0)))
    emit_outputs(log, tmp_path)
    back = read_run(tmp_path)
    assert back.columns == log.columns
    assert back.rows == log.rows  # full float round trip, cell for cell
    assert back.events == log.events
    assert back.metrics == log.metrics


def test_emit_format_subsets(tmp_path):
    log = run_simulation(parse_scenario(cruise_tree(duration=0.1)))
    only_csv = emit_outputs(log, tmp_path / "csv", formats=("csv",))
    assert sorted(only_csv) == ["states"]
    assert not (tmp_path / "csv" / "events.jsonl").exists()
    only_json = emit_outputs(log, tmp_path / "json", formats=("json",))
    assert sorted(only_json) == ["events", "metrics"]
    assert not (tmp_path / "json" / "states.csv").exists()


def test_read_run_requires_states(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_run(tmp_path)


def test_csv_header_matches_columns(tmp_path):
    log = run_simulation(parse_scenario(cruise_tree(duration=0.05)))
    emit_outputs(log, tmp_path)
    header = (tmp_path / "states.csv").read_text().splitlines()[0]
    assert header == ",".join(COLUMNS)


# --- integration convergence ----------------------------------------------------

def test_dt_halving_moves_endpoints_under_one_percent():
    # calm cruise with near-noiseless sensors: halving dt must not move the
    # endpoint materially (integration is converged, not dt-locked)
    def endpoint(dt):
        tree = cruise_tree(duration=20.0, dt=dt)
        tree["controllers"] = {"sensors": {
            "gps_sigma": 1e-9, "compass_sigma": 1e-9, "gyro_sigma": 1e-9}}
        log = run_simulation(parse_scenario(tree))
        last = log.rows[-1]
        return (last[log.columns.index("truth_x")],
                last[log.columns.index("truth_u")],
                log.metrics["distance_traveled"])

    x1, u1, d1 = endpoint(0.01)
    x2, u2, d2 = endpoint(0.005)
    assert abs(x2 - x1) / abs(x1) < 0.01
    assert abs(u2 - u1) / abs(u1) < 0.01
    assert abs(d2 - d1) / d1 < 0.01


# --- abort path -----------------------------------------------------------------

def test_numerical_blowup_aborts_with_partial_log(tmp_path):
    # a towline five orders too stiff for this dt is an unstable integration:
    # the run must stop at the fault, flag itself, and still emit
    tree = cruise_tree(duration=10.0, dt=0.01)
    tree["tuv"] = {"towline": {"stiffness": 1e12, "damping": 1e12}}
    with np.errstate(all="ignore"):  # the blow-up itself overflows, by design
        log = run_simulation(parse_scenario(tree))
    assert log.aborted is True
    assert log.metrics["aborted"] is True
    assert log.metrics["abort_reason"]
    assert 0 < len(log.rows) < 1000  # partial: stopped well before the cap
    assert [e["event"] for e in log.events[-2:]] == ["abort", "run_end"]
    assert log.events[-1]["reason"] == "aborted"
    emit_outputs(log, tmp_path)
    assert read_run(tmp_path).metrics["aborted"] is True


# --- mission end to end ----------------------------------------------------------

def test_calm_search_concludes_with_one_confirmation():
    log = run_simulation(parse_scenario(search_tree()))
    m = log.metrics
    assert m["concluded"] is True
    assert m["truncated"] is False
    assert m["final_phase"] == "concluded"
    assert m["detections"] == 1
    assert m["confirmations"] == 1
    assert m["hexapod_faults"] == 0
    assert m["area_searched"] > 0.0 and m["area_per_hour"] > 0.0

    names = [e["event"] for e in log.events]
    assert names.count("detection") == 1
    assert names.count("confirmation") == 1
    assert names.count("hexapod_deployed") == 1
    assert names.count("hexapod_recovered") == 1

    # the object sits on leg 1 of 2, so after confirming it the mission
    # resumes the remaining leg before retrieving
    transitions = [(e["source"], e["target"]) for e in log.events
                   if e["event"] == "phase_transition"]
    assert transitions == [
        ("pre_mission", "wide_area_search"),
        ("wide_area_search", "detailed_inspection"),
        ("detailed_inspection", "wide_area_search"),
        ("wide_area_search", "retrieval"),
        ("retrieval", "concluded"),
    ]
    # the winch reels in for inspection and back out afterwards
    lengths = [e["length"] for e in log.events if e["event"] == "winch_command"]
    assert lengths == [5.0, 30.0]
    # phase column tracks the reducer
    phases = col(log, "phase")
    assert phases[0] == "pre_mission"
    assert "wide_area_search" in phases and "detailed_inspection" in phases


def test_short_search_is_truncated_not_concluded():
    log = run_simulation(parse_scenario(search_tree(duration=5.0)))
    assert log.metrics["truncated"] is True
    assert log.metrics["concluded"] is False
    assert log.events[-1]["reason"] == "duration_cap"


def test_duration_cap_on_cruise_is_not_truncated():
    # the truncated flag marks an unfinished search; a cruise just ends
    log = run_simulation(parse_scenario(cruise_tree(duration=0.5)))
    assert log.metrics["truncated"] is False
    assert log.events[-1]["reason"] == "duration_cap"


def test_loiter_metrics_report_offsets():
    tree = {
        "run": {"seed": 2, "dt": 0.05, "duration": 30.0},
        "controllers": {"sensors": {"gyro_rate": 20}},
        "tuv": {"enabled": False},
        "mission": {"kind": "loiter", "point": [0.0, 0.0]},
    }
    log = run_simulation(parse_scenario(tree))
    m = log.metrics
    assert 0.0 <= m["loiter_fraction_within_2p5"] <= 1.0
    assert 0.0 <= m["loiter_p95_offset"] <= m["loiter_max_offset"]
    # calm water, starts on station: it stays there
    assert m["loiter_max_offset"] < 2.5


def test_thrust_respects_actuator_limits():
    log = run_simulation(parse_scenario(search_tree(duration=60.0)))
    for name in ("thrust_left", "thrust_right"):
        values = np.array(col(log, name), dtype=float)
        assert np.all(np.abs(values) <= 40.0 + 1e-12)


def test_tow_tension_pulls_the_body_forward():
    log = run_simulation(parse_scenario(cruise_tree(duration=30.0, dt=0.01)))
    tension = np.array([col(log, "tension_x"), col(log, "tension_y"),
                        col(log, "tension_z")], dtype=float)
    lengths = np.array(col(log, "line_length"), dtype=float)
    assert np.all(np.isfinite(tension))
    assert np.all(lengths > 0.0)
    # the logged tension acts on the towed body: under way it points up the
    # cable toward the vessel, so +x (travel direction) and -z (toward surface)
    assert np.mean(tension[0, -500:]) > 0.0
    assert np.mean(tension[2, -500:]) < 0.0
