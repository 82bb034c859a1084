"""Constant-velocity box filter with confidence-adaptive measurement noise.

State is the 8-vector (cx, cy, a, h, vx, vy, va, vh) where ``a = w/h``.
Because the transition, process noise, and measurement noise all decouple the
four measured coordinates, the covariance stays block-diagonal in
(coordinate, velocity) pairs, and each pair behaves exactly like a scalar
position/velocity filter.

The measurement covariance is scaled per update as ``R~ = (1 - conf) * R``:
a low-confidence detection leaves the posterior near the prediction, while
``conf == 1`` collapses the measured coordinates onto the measurement
exactly (the innovation covariance stays invertible through the prior
projection term).

Position and shape noise scale with the current box height; the magnitudes
are lineage conventions, not measured values, and are all exposed in config.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateShape, SingularInnovation
from .types import BBox

_DIM = 8
_MEAS = 4

# mean/covariance transition: constant velocity, one frame per step
_F = np.eye(_DIM)
_F[:_MEAS, _MEAS:] = np.eye(_MEAS)
_H = np.eye(_MEAS, _DIM)


@dataclass(frozen=True)
class KalmanParams:
    """Noise schedule weights (config keys ``kalman.*``)."""

    std_weight_position: float = 1.0 / 20.0
    std_weight_velocity: float = 1.0 / 160.0
    aspect_std: float = 1e-2
    aspect_vel_std: float = 1e-5


@dataclass(frozen=True)
class KalmanState:
    """Filter mean (8,) and covariance (8, 8); positive definite throughout."""

    mean: np.ndarray
    covariance: np.ndarray

    def validate(self) -> None:
        if np.max(np.abs(self.covariance - self.covariance.T)) > 1e-9:
            raise ValueError("covariance not symmetric")
        np.linalg.cholesky(self.covariance)  # raises LinAlgError unless SPD
        if self.mean[3] <= 0:
            raise ValueError("state height must stay positive")


def _measurement(box: BBox) -> np.ndarray:
    return np.array([box.cx, box.cy, box.w / box.h, box.h])


def init(measurement: BBox, params: KalmanParams = KalmanParams()) -> KalmanState:
    """Start a track from its first box: zero velocities, diagonal covariance."""
    mean = np.zeros(_DIM)
    mean[:_MEAS] = _measurement(measurement)
    h = measurement.h
    std = np.array(
        [
            2 * params.std_weight_position * h,
            2 * params.std_weight_position * h,
            params.aspect_std,
            2 * params.std_weight_position * h,
            10 * params.std_weight_velocity * h,
            10 * params.std_weight_velocity * h,
            params.aspect_vel_std,
            10 * params.std_weight_velocity * h,
        ]
    )
    return KalmanState(mean=mean, covariance=np.diag(std**2))


def _process_noise(h: float, params: KalmanParams) -> np.ndarray:
    std = np.array(
        [
            params.std_weight_position * h,
            params.std_weight_position * h,
            params.aspect_std,
            params.std_weight_position * h,
            params.std_weight_velocity * h,
            params.std_weight_velocity * h,
            params.aspect_vel_std,
            params.std_weight_velocity * h,
        ]
    )
    return np.diag(std**2)


def _measurement_noise(h: float, params: KalmanParams) -> np.ndarray:
    std = np.array(
        [
            params.std_weight_position * h,
            params.std_weight_position * h,
            params.aspect_std,
            params.std_weight_position * h,
        ]
    )
    return np.diag(std**2)


def predict(s: KalmanState, params: KalmanParams = KalmanParams()) -> KalmanState:
    """Advance one frame under constant velocity; covariance grows by Q."""
    q = _process_noise(s.mean[3], params)
    mean = _F @ s.mean
    cov = _F @ s.covariance @ _F.T + q
    return KalmanState(mean=mean, covariance=(cov + cov.T) / 2.0)


def update(
    s: KalmanState,
    z: BBox,
    conf: float,
    params: KalmanParams = KalmanParams(),
) -> KalmanState:
    """Fold a measured box into the state, weighted by detection confidence.

    Uses the Joseph-form covariance update, which keeps the result symmetric
    even when ``conf == 1`` drives the measurement noise to zero.
    """
    r = (1.0 - conf) * _measurement_noise(s.mean[3], params)
    innovation = _measurement(z) - _H @ s.mean
    s_mat = _H @ s.covariance @ _H.T + r
    try:
        gain = np.linalg.solve(s_mat, _H @ s.covariance).T
    except np.linalg.LinAlgError as exc:
        raise SingularInnovation("innovation covariance not invertible") from exc
    mean = s.mean + gain @ innovation
    i_kh = np.eye(_DIM) - gain @ _H
    cov = i_kh @ s.covariance @ i_kh.T + gain @ r @ gain.T
    return KalmanState(mean=mean, covariance=(cov + cov.T) / 2.0)


def project(s: KalmanState) -> BBox:
    """Convert the state mean back to a box for IoU costing."""
    cx, cy, a, h = s.mean[:_MEAS]
    w = a * h
    if w <= 0 or h <= 0:
        raise DegenerateShape(f"state projects to {w}x{h} box")
    return BBox(x=cx - w / 2.0, y=cy - h / 2.0, w=w, h=h)
