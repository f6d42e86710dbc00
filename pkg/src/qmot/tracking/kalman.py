"""Constant-velocity Kalman filter on (centre x, centre y, aspect, height)."""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .geometry import BoundingBox

# noise standard deviations are fractions of the current box height
STD_POSITION = 1.0 / 20
STD_VELOCITY = 1.0 / 160
# one box height per frame: the first two observations pin the velocity down
STD_INITIAL_VELOCITY = 1.0
STD_ASPECT = 1e-2
STD_ASPECT_VELOCITY = 1e-5
STD_ASPECT_OBSERVATION = 1e-1


class KalmanBoxFilter:
    """8-dimensional state ``(cx, cy, a, h, vcx, vcy, va, vh)``."""

    ndim = 4

    def __init__(self):
        self.motion = np.eye(8)
        self.motion[:4, 4:] = np.eye(4)
        self.observe = np.eye(4, 8)

    def initiate(self, box: BoundingBox) -> tuple[np.ndarray, np.ndarray]:
        z = np.array(box.to_xyah())
        mean = np.r_[z, np.zeros(4)]
        h = z[3]
        std = [2 * STD_POSITION * h, 2 * STD_POSITION * h, STD_ASPECT, 2 * STD_POSITION * h,
               STD_INITIAL_VELOCITY * h, STD_INITIAL_VELOCITY * h, STD_ASPECT_VELOCITY,
               STD_INITIAL_VELOCITY * h]
        return mean, np.diag(np.square(std))

    def predict(self, mean: np.ndarray, cov: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        h = mean[3]
        std = [STD_POSITION * h, STD_POSITION * h, STD_ASPECT, STD_POSITION * h,
               STD_VELOCITY * h, STD_VELOCITY * h, STD_ASPECT_VELOCITY, STD_VELOCITY * h]
        mean = self.motion @ mean
        cov = self.motion @ cov @ self.motion.T + np.diag(np.square(std))
        return mean, cov

    def update(self, mean: np.ndarray, cov: np.ndarray,
               box: BoundingBox) -> tuple[np.ndarray, np.ndarray]:
        h = mean[3]
        r = np.diag(np.square([STD_POSITION * h, STD_POSITION * h, STD_ASPECT_OBSERVATION,
                               STD_POSITION * h]))
        proj_mean = self.observe @ mean
        proj_cov = self.observe @ cov @ self.observe.T + r
        chol = scipy.linalg.cho_factor(proj_cov, lower=True, check_finite=False)
        gain = scipy.linalg.cho_solve(chol, (cov @ self.observe.T).T, check_finite=False).T
        innovation = np.array(box.to_xyah()) - proj_mean
        mean = mean + gain @ innovation
        cov = cov - gain @ proj_cov @ gain.T
        return mean, cov

    @staticmethod
    def box(mean: np.ndarray) -> BoundingBox:
        cx, cy, a, h = mean[:4]
        return BoundingBox.from_xyah(cx, cy, max(a, 1e-6), max(h, 1e-6))
