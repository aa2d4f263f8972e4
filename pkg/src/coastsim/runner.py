"""The coupled simulation loop: one scenario in, one run log out.

Each step executes in a fixed order — (1) sensors, (2) EKF predict/update,
(3) guidance + PID + thrust allocation, (4) disturbances, (5) towline
coupling, (6) ASV + TUV integration, (7) hexapod advance, (8) detection
sweep, (9) mission reducer — so identical (scenario, seed) pairs produce
byte-identical logs. Rows capture the pre-integration state: every value in
a row belongs to the same instant, the row's t.

The tow point is taken at the ASV's reference point, so the cable reaction
enters as body-frame force only (no induced yaw moment). The navigation
filter propagates with the forces the vehicle knows about: its own realized
control wrench from the previous step plus modeled damping on the estimated
state. Wind, waves, gusts and the cable are disturbances it must reject.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .asv import (AsvParams, BodyWrench, VehicleState3DOF, ZERO_WRENCH,
                  allocate_differential_thrust, asv_step)
from .control import LOITER, guidance_step, pid_step
from .core import (IntegrationFault, SeededRng, SimClock, rotate_body_to_nav,
                   rotate_nav_to_body, wrap_angle)
from .environment import (GustProcess, OutOfBounds, damping_wrench,
                          disturbance_wrench)
from .hexapod import HexapodState, body_advance, stand_legs
from .mission import (EnvironmentalSampler, MissionPhase, MissionState,
                      SweepSensor, WorldEvents, coverage_report,
                      generate_lawnmower, mission_step)
from .nav import (COMPASS, GPS, GYRO, EstimatorDivergence, SingularCovariance,
                  ekf_predict, ekf_update, initial_estimate, sample_sensors)
from .scenario import (CRUISE, LOITER_MISSION, SEARCH, Scenario,
                       guidance_for_loiter, guidance_for_waypoint)
from .tuv import (TowedBodyState, separation_rate, towline_tension, tuv_step,
                  winch_set_length)

STATES_FILE = "states.csv"
EVENTS_FILE = "events.jsonl"
METRICS_FILE = "metrics.json"

# station-keeping force law (nav frame): the integral term ends up carrying
# the mean wind load, so the commanded force vector -- and with it the bow --
# points steadily upwind instead of flipping each time the estimate crosses
# the loiter point; the stiffness/integral pair is sized to absorb a
# 10 s-correlated gust before it can push the hull a boat length off station
DP_KP = 18.0  # [N/m]
DP_KD = 50.0  # [N s/m]
DP_KI = 1.5  # [N/(m s)]
DP_INTEGRAL_MAX = 50.0  # [N] per axis

_JOINT_COLUMNS = [f"hex_leg{leg}_theta{joint}"
                  for leg in range(6) for joint in (1, 2, 3)]

COLUMNS = (
    ["t",
     "truth_x", "truth_y", "truth_psi", "truth_u", "truth_v", "truth_r",
     "est_x", "est_y", "est_psi", "est_u", "est_v", "est_r",
     "p_x", "p_y", "p_psi", "p_u", "p_v", "p_r",
     "cmd_heading", "cmd_speed", "cmd_surge", "cmd_yaw",
     "thrust_left", "thrust_right",
     "ctrl_x", "ctrl_y", "ctrl_n",
     "dist_x", "dist_y", "dist_n",
     "tuv_x", "tuv_y", "tuv_z", "tuv_vx", "tuv_vy", "tuv_vz",
     "tension_x", "tension_y", "tension_z", "line_length",
     "hex_deployed", "hex_x", "hex_y", "hex_heading", "hex_faults"]
    + _JOINT_COLUMNS
    + ["phase", "innov_gps_x", "innov_gps_y", "innov_compass", "innov_gyro"]
)

_ABORTING = (IntegrationFault, EstimatorDivergence, SingularCovariance,
             OutOfBounds)


def _freeze_integral_if_pinned(prev, nxt, error, command, lo, hi):
    """Conditional integration: while the command is pinned against a limit
    in the error's own direction, keep the old integral state (integrating
    further is pure windup the plant never sees)."""
    if (command >= hi and error > 0.0) or (command <= lo and error < 0.0):
        return dataclasses.replace(nxt, integral=prev.integral)
    return nxt


@dataclass
class RunLog:
    """Everything a run produced: per-step rows, events, final metrics."""

    columns: list
    rows: list = field(default_factory=list)
    events: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)

    @property
    def aborted(self) -> bool:
        return bool(self.metrics.get("aborted", False))


class Simulation:
    """Stepped world for one scenario; `run()` drives it to completion."""

    def __init__(self, scenario: Scenario):
        scn = scenario
        self.scn = scn
        self.rng = SeededRng(scn.seed)
        self.clock = SimClock(scn.dt)
        self.truth = scn.asv_initial
        self.est = initial_estimate(scn.asv_initial)
        self.heading_pid = scn.heading_pid
        self.speed_pid = scn.speed_pid
        self.gust = GustProcess(scn.disturbances, self.rng)
        self.ctrl_wrench = ZERO_WRENCH  # realized control from the last step
        self.tow_wrench = ZERO_WRENCH  # cable reaction, measured at the winch
        # what the anemometer accounts for: mean wind, but not gusts or waves
        self.known_field = dataclasses.replace(scn.disturbances,
                                               wave_height=0.0,
                                               gust_fraction=0.0)

        self.towline = scn.towline
        self.winch_cmd = scn.towline.unstretched_length
        self.tuv = self._initial_tuv_state() if scn.tuv_enabled else None

        self.hexapod: HexapodState | None = None  # set while deployed
        self.hexapod_faults = 0

        self.mission_state = MissionState()
        self.start_pos = np.array([scn.asv_initial.x, scn.asv_initial.y])
        ms = scn.mission
        if ms.kind == SEARCH:
            self.pattern = generate_lawnmower(ms.area, ms.swath, ms.entry)
            self.sweep = SweepSensor(ms.objects, ms.footprint, ms.p_detect,
                                     ms.position_sigma, self.rng)
        else:
            self.pattern = None
            self.sweep = None
        self.wp_index = 0
        self.sampler = EnvironmentalSampler(self.rng)

        self._dp_integral = np.zeros(2)  # [N] nav frame
        self._dp_point: np.ndarray | None = None

        self.rows: list = []
        self.events: list = []
        self.track: list = []  # truth ASV positions, one per row
        self.coverage_track: list = []  # survey-platform positions during search
        self.search_time = 0.0
        self.confirmations = 0
        self.aborted = False
        self.abort_reason = ""

    # -- construction helpers -------------------------------------------------

    def _initial_tuv_state(self) -> TowedBodyState:
        # start just taut: depth 2 m, trailing so the separation equals the
        # unstretched length (no startup jerk)
        scn = self.scn
        depth = min(2.0, 0.5 * scn.towline.unstretched_length)
        back = math.sqrt(scn.towline.unstretched_length ** 2 - depth ** 2)
        heading = np.array([math.cos(scn.asv_initial.psi),
                            math.sin(scn.asv_initial.psi)])
        xy = np.array([scn.asv_initial.x, scn.asv_initial.y]) - back * heading
        return TowedBodyState(np.array([xy[0], xy[1], depth]), np.zeros(3))

    def _log_event(self, t: float, event: str, **fields):
        record = {"t": round(t, 9), "event": event}
        record.update(fields)
        self.events.append(record)

    # -- per-step pieces -------------------------------------------------------

    def _estimated_state(self) -> VehicleState3DOF:
        return VehicleState3DOF().with_array(self.est.x)

    def _guidance(self, est_state: VehicleState3DOF):
        """(heading_error, speed_cmd, direct_surge) for the current phase.

        direct_surge is None on transit legs (the speed loop runs) and a
        body-x force [N] while station-keeping. Advances the waypoint cursor
        and records the leg-boundary/pattern flags as side effects.
        """
        scn = self.scn
        ms = scn.mission
        self._leg_boundary = False
        est_pose = (est_state.x, est_state.y, est_state.psi)

        if ms.kind == CRUISE:
            self._cmd_heading = ms.heading
            return wrap_angle(ms.heading - est_state.psi), ms.speed, None
        if ms.kind == LOITER_MISSION:
            setpoint = guidance_for_loiter(scn, ms.point)
        else:
            setpoint = self._search_setpoint(est_pose)
        if setpoint.mode == LOITER:
            return self._station_keeping(setpoint.target, est_state)
        heading_error, speed_cmd, arrived = guidance_step(setpoint, est_pose)
        if (self.mission_state.phase is MissionPhase.WIDE_AREA_SEARCH
                and arrived and self.wp_index < len(self.pattern.waypoints)):
            if self.wp_index % 2 == 1:  # reached the far end of a leg
                self._leg_boundary = True
            self.wp_index += 1
        self._cmd_heading = wrap_angle(est_state.psi + heading_error)
        return heading_error, speed_cmd, None

    def _station_keeping(self, point, est_state: VehicleState3DOF):
        """Hold a point with a position PID over nav-frame force."""
        if self._dp_point is None or not np.array_equal(point, self._dp_point):
            self._dp_integral = np.zeros(2)
            self._dp_point = np.array(point, dtype=float)
        err = self._dp_point - np.array([est_state.x, est_state.y])
        v_nav = rotate_body_to_nav([est_state.u, est_state.v], est_state.psi)
        self._dp_integral = np.clip(
            self._dp_integral + DP_KI * err * self.scn.dt,
            -DP_INTEGRAL_MAX, DP_INTEGRAL_MAX)
        force = DP_KP * err - DP_KD * v_nav + self._dp_integral
        magnitude = float(np.hypot(force[0], force[1]))
        if magnitude < 1e-9:
            self._cmd_heading = est_state.psi
            return 0.0, 0.0, 0.0
        desired = math.atan2(force[1], force[0])
        heading_error = wrap_angle(desired - est_state.psi)
        surge = magnitude
        if abs(heading_error) > 0.5 * math.pi:
            # push stern-first rather than turning all the way around
            heading_error = wrap_angle(heading_error + math.pi)
            surge = -magnitude
        surge *= math.cos(heading_error)  # only the aligned component helps
        self._cmd_heading = wrap_angle(est_state.psi + heading_error)
        return heading_error, 0.0, surge

    def _search_setpoint(self, est_pose):
        scn = self.scn
        phase = self.mission_state.phase
        if phase is MissionPhase.PRE_MISSION:
            return guidance_for_loiter(scn, self.start_pos)
        if phase is MissionPhase.WIDE_AREA_SEARCH:
            if self.wp_index < len(self.pattern.waypoints):
                return guidance_for_waypoint(
                    scn, self.pattern.waypoints[self.wp_index])
            return guidance_for_loiter(scn, self.pattern.waypoints[-1])
        if phase is MissionPhase.DETAILED_INSPECTION:
            target = self.mission_state.current_target.position
            offset = math.hypot(est_pose[0] - target[0], est_pose[1] - target[1])
            if offset > 2.0 * scn.arrival_radius:
                return guidance_for_waypoint(scn, target)
            return guidance_for_loiter(scn, target)
        # retrieval (and the final tick of a concluded run): head home
        return guidance_for_loiter(scn, self.start_pos)

    def _hexapod_phase(self, t: float, dt: float) -> bool:
        """Deploy / walk / confirm during detailed inspection.

        Returns True when the current target was confirmed this step.
        """
        scn = self.scn
        target_ev = self.mission_state.current_target
        if (self.mission_state.phase is not MissionPhase.DETAILED_INSPECTION
                or target_ev is None):
            return False
        target = target_ev.position
        asv_pos = np.array([self.truth.x, self.truth.y])

        if self.hexapod is None:
            # deploy once the ASV has settled on the inspection site (and the
            # tether can physically span the remaining gap)
            est = self.est.x
            arrived = (math.hypot(est[0] - target[0], est[1] - target[1])
                       <= 2.0 * scn.arrival_radius)
            if (arrived and float(np.linalg.norm(asv_pos - target))
                    <= scn.mission.tether_reach):
                terrain, _ = scn.terrain.terrain_at(asv_pos)
                self.hexapod = HexapodState(
                    position=asv_pos.copy(), heading=self.truth.psi,
                    terrain=terrain, legs=stand_legs(scn.hexapod_params))
                self._log_event(t, "hexapod_deployed",
                                position=[float(asv_pos[0]), float(asv_pos[1])],
                                target=target_ev.object_id)
            return False

        vec = target - self.hexapod.position
        distance = float(np.linalg.norm(vec))
        if distance > scn.mission.confirm_radius:
            terrain, _ = scn.terrain.terrain_at(self.hexapod.position)
            self.hexapod.terrain = terrain
            heading_cmd = math.atan2(vec[1], vec[0])
            self.hexapod = body_advance(self.hexapod, heading_cmd, dt,
                                        scn.hexapod_params)
            distance = float(np.linalg.norm(target - self.hexapod.position))
        if distance <= scn.mission.confirm_radius:
            target_ev.confirmed = True
            self.confirmations += 1
            self._log_event(t, "confirmation", object_id=target_ev.object_id,
                            position=[float(target[0]), float(target[1])])
            self.hexapod_faults += self.hexapod.faults
            self.hexapod = None
            self._log_event(t, "hexapod_recovered",
                            object_id=target_ev.object_id)
            return True
        return False

    def _apply_phase_change(self, before: MissionPhase, t: float):
        after = self.mission_state.phase
        if after is before:
            return
        self._log_event(t, "phase_transition", source=before.value,
                        target=after.value)
        scn = self.scn
        if after is MissionPhase.DETAILED_INSPECTION:
            self.winch_cmd = scn.mission.inspection_standoff
            self._log_event(t, "winch_command", length=self.winch_cmd)
        elif before is MissionPhase.DETAILED_INSPECTION:
            self.winch_cmd = scn.towline.unstretched_length
            self._log_event(t, "winch_command", length=self.winch_cmd)

    # -- the step itself -------------------------------------------------------

    def step(self):
        scn = self.scn
        dt = scn.dt
        t = self.clock.t
        step_idx = self.clock.step_count
        current = scn.disturbances.current_nav()

        # (1) sensors
        readings = sample_sensors(self.truth, step_idx, dt, scn.sensors,
                                  self.rng)

        # (2) navigation filter: propagate with the modeled (known) forces,
        # then absorb this step's measurements
        if step_idx > 0:
            # thrust is commanded, cable tension is read off the winch load
            # cell, mean wind off the anemometer, damping follows from the
            # estimated state; gusts and waves stay unmodeled and must be
            # absorbed as process noise
            est_state = self._estimated_state()
            model_wrench = (self.ctrl_wrench + self.tow_wrench
                            + damping_wrench(est_state, scn.damping, current)
                            + disturbance_wrench(self.known_field, est_state,
                                                 t, 0.0))
            self.est = ekf_predict(self.est, scn.asv_params, scn.ekf,
                                   model_wrench, dt)
        innovations = {GPS: None, COMPASS: None, GYRO: None}
        for reading in readings:
            result = ekf_update(self.est, reading, scn.ekf)
            self.est = result.state
            if result.accepted:
                innovations[reading.kind] = result.innovation

        # (3) guidance + PID + allocation
        est_state = self._estimated_state()
        heading_error, speed_cmd, direct_surge = self._guidance(est_state)
        prev_heading_pid = self.heading_pid
        yaw_cmd, self.heading_pid = pid_step(self.heading_pid, heading_error, dt)
        self.heading_pid = _freeze_integral_if_pinned(
            prev_heading_pid, self.heading_pid, heading_error, yaw_cmd,
            *self.heading_pid.output_limits)
        # steering gets priority: cap surge to the thrust headroom the yaw
        # command leaves, else saturation silently halves the yaw moment and
        # the tow pendulum can pump the heading into a weave
        headroom = (2.0 * scn.asv_params.max_thrust
                    - abs(yaw_cmd) / scn.asv_params.thruster_half_spacing)
        if direct_surge is not None:
            surge_cmd = direct_surge
        else:
            prev_speed_pid = self.speed_pid
            speed_error = speed_cmd - est_state.u
            surge_pid, self.speed_pid = pid_step(self.speed_pid, speed_error,
                                                 dt)
            # feed forward the loads the vehicle can account for -- hull
            # damping at the commanded speed and the cable pull read off the
            # winch -- so the integral only absorbs wind and waves
            surge_cmd = (surge_pid + scn.damping.d11 * speed_cmd
                         - self.tow_wrench.X)
            self.speed_pid = _freeze_integral_if_pinned(
                prev_speed_pid, self.speed_pid, speed_error, surge_cmd,
                -headroom, headroom)
        surge_cmd = max(-headroom, min(headroom, surge_cmd))
        left, right, realized = allocate_differential_thrust(
            surge_cmd, yaw_cmd, scn.asv_params)

        # (4) disturbances
        gust = self.gust.step(dt)
        disturbance = disturbance_wrench(scn.disturbances, self.truth, t, gust)
        damping = damping_wrench(self.truth, scn.damping, current)

        # (5) towline coupling (tow point aft of the reference point, so the
        # cable pull also weathervanes the hull)
        tension = np.zeros(3)
        tow_wrench = ZERO_WRENCH
        if self.tuv is not None:
            self.towline = winch_set_length(self.towline, self.winch_cmd, dt)
            x_a = scn.tow_attach_x
            attach_xy = (np.array([self.truth.x, self.truth.y])
                         + rotate_body_to_nav([x_a, 0.0], self.truth.psi))
            attach = np.array([attach_xy[0], attach_xy[1], 0.0])
            vel_nav = rotate_body_to_nav(
                [self.truth.u, self.truth.v + self.truth.r * x_a],
                self.truth.psi)
            attach_vel = np.array([vel_nav[0], vel_nav[1], 0.0])
            rate = separation_rate(attach, attach_vel, self.tuv.position,
                                   self.tuv.velocity)
            tension = towline_tension(attach, self.tuv.position, rate,
                                      self.towline)
            reaction = rotate_nav_to_body(-tension[:2], self.truth.psi)
            tow_wrench = BodyWrench(float(reaction[0]), float(reaction[1]),
                                    x_a * float(reaction[1]))

        # log the step's state before integrating: one instant per row
        self._append_row(t, heading_error, speed_cmd, surge_cmd, yaw_cmd,
                         left, right, realized, disturbance, tension,
                         innovations)

        # (6) integrate both hulls
        total = realized + disturbance + damping + tow_wrench
        self.truth = asv_step(self.truth, scn.asv_params, total, dt, t)
        if self.tuv is not None:
            current3 = np.array([current[0], current[1], 0.0])
            self.tuv = tuv_step(self.tuv, scn.tuv_params, tension, current3,
                                dt, t)

        # (7) hexapod advance (when deployed)
        confirmed = self._hexapod_phase(t, dt)

        # (8) detection sweep (survey platform = TUV when towed, else ASV)
        new_detections = []
        if (self.sweep is not None
                and self.mission_state.phase is MissionPhase.WIDE_AREA_SEARCH):
            platform = (self.tuv.position[:2] if self.tuv is not None
                        else np.array([self.truth.x, self.truth.y]))
            self.coverage_track.append(np.array(platform, dtype=float))
            self.search_time += dt
            new_detections = self.sweep.sweep(platform, t)
            for ev in new_detections:
                self._log_event(t, "detection", object_id=ev.object_id,
                                vehicle=ev.vehicle,
                                position=[float(ev.position[0]),
                                          float(ev.position[1])])

        sample = self.sampler.maybe_sample(t, [self.truth.x, self.truth.y])
        if sample is not None and self.mission_state.phase is not MissionPhase.CONCLUDED:
            self._log_event(t, "env_sample",
                            position=[float(sample.position[0]),
                                      float(sample.position[1])],
                            temperature=round(sample.temperature, 6),
                            turbidity=round(sample.turbidity, 6),
                            salinity=round(sample.salinity, 6))

        # (9) mission reducer
        if self.scn.mission.kind == SEARCH:
            recovered = (
                self.mission_state.phase is MissionPhase.RETRIEVAL
                and float(np.linalg.norm(
                    np.array([self.truth.x, self.truth.y]) - self.start_pos))
                <= scn.mission.recovery_radius)
            events = WorldEvents(
                t=t,
                deployment_complete=t >= scn.mission.deploy_time,
                at_leg_boundary=self._leg_boundary,
                pattern_complete=self.wp_index >= len(self.pattern.waypoints),
                new_detections=new_detections,
                target_processed=confirmed,
                vehicles_recovered=recovered,
                reference_position=np.array([est_state.x, est_state.y]))
            before = self.mission_state.phase
            self.mission_state = mission_step(self.mission_state, events)
            self._apply_phase_change(before, t)

        self.ctrl_wrench = realized
        self.tow_wrench = tow_wrench
        self.clock = self.clock.tick()

    def _append_row(self, t, heading_error, speed_cmd, surge_cmd, yaw_cmd,
                    left, right, realized, disturbance, tension, innovations):
        truth, est = self.truth, self.est
        row = [t,
               truth.x, truth.y, truth.psi, truth.u, truth.v, truth.r,
               est.x[0], est.x[1], est.x[2], est.x[3], est.x[4], est.x[5],
               est.P[0, 0], est.P[1, 1], est.P[2, 2],
               est.P[3, 3], est.P[4, 4], est.P[5, 5],
               self._cmd_heading, speed_cmd, surge_cmd, yaw_cmd,
               left, right,
               realized.X, realized.Y, realized.N,
               disturbance.X, disturbance.Y, disturbance.N]
        if self.tuv is not None:
            row += [*self.tuv.position, *self.tuv.velocity, *tension,
                    self.towline.unstretched_length]
        else:
            row += [None] * 10
        if self.hexapod is not None:
            row += [1, self.hexapod.position[0], self.hexapod.position[1],
                    self.hexapod.heading, self.hexapod.faults]
            for cfg in self.hexapod.legs:
                row += [cfg.theta1, cfg.theta2, cfg.theta3]
            if not self.hexapod.legs:
                row += [None] * 18
        else:
            row += [0, None, None, None, self.hexapod_faults] + [None] * 18
        row.append(self.mission_state.phase.value)
        gps = innovations[GPS]
        row += ([float(gps[0]), float(gps[1])] if gps is not None
                else [None, None])
        compass = innovations[COMPASS]
        row.append(float(compass[0]) if compass is not None else None)
        gyro = innovations[GYRO]
        row.append(float(gyro[0]) if gyro is not None else None)

        self.rows.append([float(v) if isinstance(v, (np.floating, np.integer))
                          else v for v in row])
        self.track.append(np.array([truth.x, truth.y]))

    # -- driving ----------------------------------------------------------------

    def run(self) -> RunLog:
        scn = self.scn
        n_steps = int(round(scn.duration / scn.dt))
        while self.clock.step_count < n_steps:
            if (scn.mission.kind == SEARCH
                    and self.mission_state.phase is MissionPhase.CONCLUDED):
                break
            try:
                self.step()
            except _ABORTING as exc:
                self.aborted = True
                self.abort_reason = f"{type(exc).__name__}: {exc}"
                self._log_event(self.clock.t, "abort", reason=self.abort_reason)
                break

        concluded = self.mission_state.phase is MissionPhase.CONCLUDED
        truncated = (scn.mission.kind == SEARCH and not concluded
                     and not self.aborted)
        reason = ("aborted" if self.aborted
                  else "concluded" if concluded else "duration_cap")
        self._log_event(self.clock.t, "run_end", reason=reason)
        metrics = self._metrics(concluded, truncated)
        return RunLog(columns=list(COLUMNS), rows=self.rows,
                      events=self.events, metrics=metrics)

    def _metrics(self, concluded: bool, truncated: bool) -> dict:
        scn = self.scn
        track = np.array(self.track) if self.track else np.zeros((0, 2))
        distance = (float(np.sum(np.linalg.norm(np.diff(track, axis=0), axis=1)))
                    if len(track) > 1 else 0.0)
        detections = len(self.sweep.detected) if self.sweep is not None else 0
        metrics = {
            "scenario": scn.name,
            "seed": scn.seed,
            "dt": scn.dt,
            "steps": len(self.rows),
            "sim_time": round(self.clock.t, 9),
            "final_phase": self.mission_state.phase.value,
            "concluded": concluded,
            "truncated": truncated,
            "aborted": self.aborted,
            "abort_reason": self.abort_reason,
            "distance_traveled": distance,
            "detections": detections,
            "confirmations": self.confirmations,
            "hexapod_faults": self.hexapod_faults,
        }
        if scn.mission.kind == SEARCH and self.coverage_track:
            report = coverage_report(np.array(self.coverage_track),
                                     scn.mission.swath,
                                     active_time=max(self.search_time, scn.dt),
                                     detections=detections,
                                     confirmations=self.confirmations)
            metrics["area_searched"] = report["area_searched"]
            metrics["area_per_hour"] = report["area_per_hour"]
        elif scn.mission.kind == SEARCH:
            metrics["area_searched"] = 0.0
            metrics["area_per_hour"] = 0.0
        if scn.mission.kind == LOITER_MISSION and len(track):
            offsets = np.linalg.norm(track - scn.mission.point, axis=1)
            metrics["loiter_max_offset"] = float(np.max(offsets))
            metrics["loiter_p95_offset"] = float(np.quantile(offsets, 0.95))
            metrics["loiter_fraction_within_2p5"] = float(
                np.mean(offsets <= 2.5))
        return metrics


def run_simulation(scenario: Scenario) -> RunLog:
    """Drive one scenario to its end; deterministic in (scenario, seed)."""
    return Simulation(scenario).run()


# -- serialization -------------------------------------------------------------

def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_outputs(log: RunLog, out_dir, formats=("csv", "json")) -> dict:
    """Write the log to a run directory; returns {kind: path}."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = {}
    if "csv" in formats:
        path = out / STATES_FILE
        with open(path, "w", encoding="ascii", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(log.columns)
            for row in log.rows:
                writer.writerow([_format_cell(v) for v in row])
        written["states"] = path
    if "json" in formats:
        events_path = out / EVENTS_FILE
        with open(events_path, "w", encoding="ascii", newline="") as fh:
            for event in log.events:
                fh.write(json.dumps(event, sort_keys=True) + "\n")
        written["events"] = events_path
        metrics_path = out / METRICS_FILE
        with open(metrics_path, "w", encoding="ascii", newline="") as fh:
            json.dump(log.metrics, fh, sort_keys=True, indent=2)
            fh.write("\n")
        written["metrics"] = metrics_path
    return written


def _parse_cell(column: str, cell: str):
    if cell == "":
        return None
    if column == "phase":
        return cell
    try:
        return int(cell)
    except ValueError:
        return float(cell)


def read_run(run_dir) -> RunLog:
    """Parse a run directory back into a RunLog (inverse of emit_outputs)."""
    run = Path(run_dir)
    states = run / STATES_FILE
    if not states.exists():
        raise FileNotFoundError(f"no {STATES_FILE} in {run}")
    with open(states, encoding="ascii", newline="") as fh:
        reader = csv.reader(fh)
        columns = next(reader)
        rows = [[_parse_cell(col, cell) for col, cell in zip(columns, row)]
                for row in reader]
    events = []
    events_path = run / EVENTS_FILE
    if events_path.exists():
        with open(events_path, encoding="ascii") as fh:
            events = [json.loads(line) for line in fh if line.strip()]
    metrics = {}
    metrics_path = run / METRICS_FILE
    if metrics_path.exists():
        with open(metrics_path, encoding="ascii") as fh:
            metrics = json.load(fh)
    return RunLog(columns=columns, rows=rows, events=events, metrics=metrics)
