"""Simulated sensors and the extended Kalman filter for the surface vehicle.

The filter estimates the full 6-state (x, y, psi, u, v, r). Prediction runs
one RK4 step of the rigid-body model under the realized control wrench, with
the covariance propagated through the analytic Jacobian of that discrete map.
Updates are sequential per reading (GPS position, compass heading, gyro yaw
rate) with Mahalanobis gating; heading innovations are wrapped.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .asv import AsvParams, BodyWrench, VehicleState3DOF, asv_derivative
from .core import SeededRng, wrap_angle

# sensor stream ids under the run's master seed
STREAM_GPS = 1
STREAM_COMPASS = 2
STREAM_GYRO = 3

GPS = "gps"
COMPASS = "compass"
GYRO = "gyro"


class EstimatorDivergence(RuntimeError):
    """Estimator state or covariance stopped being finite."""


class SingularCovariance(RuntimeError):
    """Innovation covariance is numerically singular."""


@dataclass
class SensorConfig:
    gps_rate: float = 1.0  # [Hz]
    gps_sigma: float = 1.25  # per-axis position noise [m]
    compass_rate: float = 10.0  # [Hz]
    compass_sigma: float = 0.02  # heading noise [rad]
    gyro_rate: float = 100.0  # [Hz]
    gyro_sigma: float = 0.005  # yaw-rate noise [rad/s]

    def period_steps(self, rate: float, dt: float) -> int:
        """Steps between samples; the rate must divide the sim rate 1/dt."""
        steps = 1.0 / (rate * dt)
        n = round(steps)
        if n < 1 or abs(steps - n) > 1e-9:
            raise ValueError(
                f"sensor rate {rate} Hz does not divide the sim rate {1.0 / dt:g} Hz")
        return n


class SensorReading(NamedTuple):
    kind: str  # gps / compass / gyro
    t: float  # sample time [s]
    value: np.ndarray


def sample_sensors(truth: VehicleState3DOF, step: int, dt: float,
                   cfg: SensorConfig, rng: SeededRng) -> list[SensorReading]:
    """Noisy readings due at this step (step 0 samples everything)."""
    t = step * dt
    out: list[SensorReading] = []
    if step % cfg.period_steps(cfg.gps_rate, dt) == 0:
        g = rng.stream(STREAM_GPS)
        pos = np.array([truth.x, truth.y]) + cfg.gps_sigma * g.standard_normal(2)
        out.append(SensorReading(GPS, t, pos))
    if step % cfg.period_steps(cfg.compass_rate, dt) == 0:
        g = rng.stream(STREAM_COMPASS)
        psi = wrap_angle(truth.psi + cfg.compass_sigma * g.standard_normal())
        out.append(SensorReading(COMPASS, t, np.array([psi])))
    if step % cfg.period_steps(cfg.gyro_rate, dt) == 0:
        g = rng.stream(STREAM_GYRO)
        out.append(SensorReading(GYRO, t, np.array([truth.r + cfg.gyro_sigma * g.standard_normal()])))
    return out


@dataclass
class EkfParams:
    # continuous process-noise PSD per state, discretized as diag(q) * dt
    q_psd: tuple = (1e-4, 1e-4, 1e-5, 0.2, 0.2, 0.05)
    gps_sigma: float = 1.25  # assumed measurement noise [m]
    compass_sigma: float = 0.02  # [rad]
    gyro_sigma: float = 0.005  # [rad/s]
    gate_sigma: float = 5.0  # Mahalanobis rejection bound [sigma]

    def q_discrete(self, dt: float) -> np.ndarray:
        return np.diag(np.asarray(self.q_psd, dtype=float)) * dt

    def r_matrix(self, kind: str) -> np.ndarray:
        if kind == GPS:
            return np.eye(2) * self.gps_sigma ** 2
        if kind == COMPASS:
            return np.array([[self.compass_sigma ** 2]])
        if kind == GYRO:
            return np.array([[self.gyro_sigma ** 2]])
        raise ValueError(f"unknown sensor kind {kind!r}")


@dataclass
class EstimatorState:
    x: np.ndarray  # (6,) mean: x, y, psi, u, v, r
    P: np.ndarray  # (6, 6) covariance

    def copy(self) -> "EstimatorState":
        return EstimatorState(self.x.copy(), self.P.copy())


def initial_estimate(state: VehicleState3DOF, pos_sigma: float = 2.0,
                     psi_sigma: float = 0.1, vel_sigma: float = 0.5) -> EstimatorState:
    P0 = np.diag([pos_sigma ** 2, pos_sigma ** 2, psi_sigma ** 2,
                  vel_sigma ** 2, vel_sigma ** 2, vel_sigma ** 2])
    return EstimatorState(state.as_array(), P0)


def dynamics_jacobian(x: np.ndarray, params: AsvParams) -> np.ndarray:
    """Analytic d(state derivative)/d(state) for the 6-state model."""
    psi, u, v, r = x[2], x[3], x[4], x[5]
    c, s = np.cos(psi), np.sin(psi)
    A = np.zeros((6, 6))
    A[0, 2] = -u * s - v * c
    A[0, 3] = c
    A[0, 4] = -s
    A[1, 2] = u * c - v * s
    A[1, 3] = s
    A[1, 4] = c
    A[2, 5] = 1.0
    A[3, 4] = (params.m33 - params.m22) * r / params.m11
    A[3, 5] = (params.m33 - params.m22) * v / params.m11
    A[4, 3] = (params.m11 - params.m33) * r / params.m22
    A[4, 5] = (params.m11 - params.m33) * u / params.m22
    A[5, 3] = (params.m22 - params.m11) * v / params.m33
    A[5, 4] = (params.m22 - params.m11) * u / params.m33
    return A


def predict_mean(x: np.ndarray, params: AsvParams, wrench: BodyWrench,
                 dt: float) -> np.ndarray:
    """The discrete mean map: one RK4 step of the vehicle model."""
    k1 = asv_derivative(x, params, wrench)
    k2 = asv_derivative(x + 0.5 * dt * k1, params, wrench)
    k3 = asv_derivative(x + 0.5 * dt * k2, params, wrench)
    k4 = asv_derivative(x + dt * k3, params, wrench)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def discrete_jacobian(x: np.ndarray, params: AsvParams, wrench: BodyWrench,
                      dt: float) -> np.ndarray:
    """Analytic Jacobian of predict_mean, chain-ruled through the RK4 stages."""
    I6 = np.eye(6)
    k1 = asv_derivative(x, params, wrench)
    K1 = dynamics_jacobian(x, params)
    x2 = x + 0.5 * dt * k1
    k2 = asv_derivative(x2, params, wrench)
    K2 = dynamics_jacobian(x2, params) @ (I6 + 0.5 * dt * K1)
    x3 = x + 0.5 * dt * k2
    k3 = asv_derivative(x3, params, wrench)
    K3 = dynamics_jacobian(x3, params) @ (I6 + 0.5 * dt * K2)
    x4 = x + dt * k3
    K4 = dynamics_jacobian(x4, params) @ (I6 + dt * K3)
    return I6 + (dt / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4)


def ekf_predict(est: EstimatorState, params: AsvParams, ekf: EkfParams,
                wrench: BodyWrench, dt: float) -> EstimatorState:
    x = predict_mean(est.x, params, wrench, dt)
    x[2] = wrap_angle(x[2])
    F = discrete_jacobian(est.x, params, wrench, dt)
    P = F @ est.P @ F.T + ekf.q_discrete(dt)
    P = 0.5 * (P + P.T)
    if not (np.isfinite(x).all() and np.isfinite(P).all()):
        raise EstimatorDivergence("non-finite estimate after prediction")
    return EstimatorState(x, P)


_H_GPS = np.zeros((2, 6)); _H_GPS[0, 0] = 1.0; _H_GPS[1, 1] = 1.0
_H_COMPASS = np.zeros((1, 6)); _H_COMPASS[0, 2] = 1.0
_H_GYRO = np.zeros((1, 6)); _H_GYRO[0, 5] = 1.0


def measurement_model(kind: str, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(predicted measurement, H) for one sensor kind."""
    if kind == GPS:
        return x[0:2].copy(), _H_GPS
    if kind == COMPASS:
        return np.array([x[2]]), _H_COMPASS
    if kind == GYRO:
        return np.array([x[5]]), _H_GYRO
    raise ValueError(f"unknown sensor kind {kind!r}")


class UpdateResult(NamedTuple):
    state: EstimatorState
    innovation: np.ndarray
    accepted: bool


def ekf_update(est: EstimatorState, reading: SensorReading,
               ekf: EkfParams) -> UpdateResult:
    """Sequential Kalman update for one reading, with Mahalanobis gating.

    A reading whose innovation Mahalanobis distance exceeds gate_sigma is
    rejected: the state is returned unchanged and accepted=False so the
    caller can log the rejection.
    """
    z_hat, H = measurement_model(reading.kind, est.x)
    y = np.asarray(reading.value, dtype=float) - z_hat
    if reading.kind == COMPASS:
        y[0] = wrap_angle(y[0])
    R = ekf.r_matrix(reading.kind)
    S = H @ est.P @ H.T + R
    try:
        S_inv_y = np.linalg.solve(S, y)
    except np.linalg.LinAlgError as exc:
        raise SingularCovariance(f"innovation covariance singular for {reading.kind}") from exc
    d2 = float(y @ S_inv_y)
    if d2 < 0.0 or not np.isfinite(d2):
        raise SingularCovariance(f"innovation covariance not positive definite for {reading.kind}")
    if d2 > ekf.gate_sigma ** 2:
        return UpdateResult(est, y, False)
    K = est.P @ H.T @ np.linalg.inv(S)
    x = est.x + K @ y
    x[2] = wrap_angle(x[2])
    P = (np.eye(6) - K @ H) @ est.P
    P = 0.5 * (P + P.T)
    if not (np.isfinite(x).all() and np.isfinite(P).all()):
        raise EstimatorDivergence(f"non-finite estimate after {reading.kind} update")
    return UpdateResult(EstimatorState(x, P), y, True)
