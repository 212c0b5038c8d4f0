"""Fixed-length trajectory resampling and the flattened trajectory vector.

Variable-length waypoint sequences are resampled to exactly 15 waypoints:
positions by linear interpolation, orientations by spherical interpolation,
gripper states copied from the nearer original waypoint. The flattened form
is 15 x (3 position + 4 quaternion + 3 gripper one-hot) = 150 values.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import EmptyTrajectoryError
from .records import GRIPPER_STATES, Trajectory, Waypoint

NORMALIZED_LENGTH = 15
WAYPOINT_DIM = 3 + 4 + len(GRIPPER_STATES)
TRAJECTORY_DIM = NORMALIZED_LENGTH * WAYPOINT_DIM  # 150


def quaternion_angle(q0: np.ndarray, q1: np.ndarray) -> float:
    """Rotation angle between two unit quaternions: 2*acos(|q0 . q1|)."""
    dot = abs(float(np.dot(q0, q1)))
    return 2.0 * float(np.arccos(min(dot, 1.0)))


def slerp(q0: np.ndarray, q1: np.ndarray, frac: float) -> np.ndarray:
    """Spherical interpolation along the shorter arc between unit quaternions."""
    q0 = np.asarray(q0, dtype=np.float64)
    q1 = np.asarray(q1, dtype=np.float64)
    dot = float(np.dot(q0, q1))
    if dot < 0.0:
        q1 = -q1
        dot = -dot
    if dot > 1.0 - 1e-10:
        # Nearly parallel: linear interpolation avoids division by sin(0).
        out = (1.0 - frac) * q0 + frac * q1
        return out / np.linalg.norm(out)
    theta = np.arccos(min(dot, 1.0))
    sin_theta = np.sin(theta)
    w0 = np.sin((1.0 - frac) * theta) / sin_theta
    w1 = np.sin(frac * theta) / sin_theta
    out = w0 * q0 + w1 * q1
    return out / np.linalg.norm(out)


def _sample_parameters(trajectory: Trajectory, mode: str) -> np.ndarray:
    """Waypoint-index positions at which the 15 output samples are taken."""
    n = len(trajectory)
    if mode == "index":
        return np.arange(NORMALIZED_LENGTH, dtype=np.float64) * (n - 1) / (
            NORMALIZED_LENGTH - 1
        )
    if mode == "arclength":
        positions = trajectory.positions()
        seg = np.linalg.norm(np.diff(positions, axis=0), axis=1)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        if cum[-1] == 0.0:
            return np.zeros(NORMALIZED_LENGTH)
        targets = np.linspace(0.0, cum[-1], NORMALIZED_LENGTH)
        # Map arc-length targets back to fractional waypoint indices.
        idx = np.searchsorted(cum, targets, side="right") - 1
        idx = np.clip(idx, 0, n - 2)
        seg_len = np.where(seg[idx] > 0.0, seg[idx], 1.0)
        return idx + (targets - cum[idx]) / seg_len
    raise ValueError(f"unknown resampling mode {mode!r}")


def normalize_trajectory(
    trajectory: Trajectory, mode: str = "index"
) -> "NormalizedTrajectory":
    """Resample a trajectory to exactly 15 waypoints.

    ``mode`` selects the sampling parameterization: "index" spaces samples
    uniformly along the waypoint index line (default), "arclength" along
    cumulative Euclidean distance. Length-1 trajectories are replicated.
    """
    n = len(trajectory)
    if n == 0:
        raise EmptyTrajectoryError(f"trajectory {trajectory.traj_id!r} has no waypoints")
    if n == 1:
        waypoints = tuple(trajectory.waypoints[0] for _ in range(NORMALIZED_LENGTH))
        return NormalizedTrajectory(traj_id=trajectory.traj_id, waypoints=waypoints)

    params = _sample_parameters(trajectory, mode)
    out = []
    for u in params:
        lo = int(np.floor(u))
        lo = min(lo, n - 2)
        hi = lo + 1
        frac = u - lo
        if frac == 0.0:
            out.append(trajectory.waypoints[lo])
            continue
        a, b = trajectory.waypoints[lo], trajectory.waypoints[hi]
        position = (1.0 - frac) * a.position + frac * b.position
        orientation = slerp(a.orientation, b.orientation, frac)
        gripper = a.gripper if frac <= 0.5 else b.gripper  # tie goes to the earlier
        out.append(Waypoint(position=position, orientation=orientation, gripper=gripper))
    return NormalizedTrajectory(traj_id=trajectory.traj_id, waypoints=tuple(out))


class NormalizedTrajectory(Trajectory):
    """A trajectory resampled to exactly 15 waypoints."""

    def __init__(self, traj_id: str, waypoints: tuple[Waypoint, ...]):
        if len(waypoints) != NORMALIZED_LENGTH:
            raise ValueError(
                f"normalized trajectory needs {NORMALIZED_LENGTH} waypoints, "
                f"got {len(waypoints)}"
            )
        object.__setattr__(self, "traj_id", traj_id)
        object.__setattr__(self, "waypoints", waypoints)

    @property
    def flattened(self) -> np.ndarray:
        """(150,) vector: per waypoint, position, quaternion, gripper one-hot."""
        rows = np.zeros((NORMALIZED_LENGTH, WAYPOINT_DIM))
        for i, w in enumerate(self.waypoints):
            rows[i, :3] = w.position
            rows[i, 3:7] = w.orientation
            rows[i, 7 + GRIPPER_STATES.index(w.gripper)] = 1.0
        return rows.ravel()


class TrajectoryNormalizer(BaseEstimator, TransformerMixin):
    """Sklearn-style transformer from trajectories to flattened 150-vectors."""

    def __init__(self, mode: str = "index"):
        self.mode = mode

    def fit(self, X, y=None):
        return self

    def transform(self, X) -> np.ndarray:
        return np.stack(
            [normalize_trajectory(t, mode=self.mode).flattened for t in X]
        )
