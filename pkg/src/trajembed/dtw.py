"""Dynamic-time-warping loss between manipulation trajectories.

The local distance between two waypoints combines weighted position distance,
quaternion rotation angle, and a gripper-state mismatch penalty. A standard
monotone warping DP accumulates local distances; the returned value is the
accumulated cost of the best alignment divided by that alignment's length, so
values are per-matched-pair and comparable across trajectory lengths. Cost
ties between alignments are broken toward the shorter path, which keeps the
DP, its batched variant, and the brute-force enumeration used in tests in
exact agreement.

Default weights put positions on a 2.5 cm grid-cell scale (40 per meter);
they are calibrated so that same-concept noisy demonstrations in the bundled
synthetic generator score well under the accuracy threshold of 10 while
wrong-concept trajectories score well above it.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .errors import EmptyTrajectoryError
from .records import Trajectory

_HUGE_LENGTH = np.iinfo(np.int64).max


@dataclass(frozen=True)
class DtwWeights:
    """Component weights of the waypoint distance (all non-negative)."""

    position: float = 40.0  # per meter; 1.0 per 2.5 cm grid cell
    rotation: float = 1.0  # per radian
    gripper: float = 1.0  # per mismatched state

    def __post_init__(self):
        if min(self.position, self.rotation, self.gripper) < 0:
            raise ValueError("DTW weights must be non-negative")


def _trajectory_arrays(trajectory: Trajectory):
    if len(trajectory) == 0:
        raise EmptyTrajectoryError(
            f"trajectory {trajectory.traj_id!r} has no waypoints"
        )
    return trajectory.positions(), trajectory.orientations(), trajectory.grippers()


def _local_distance_stack(arrays_a, arrays_b, weights: DtwWeights) -> np.ndarray:
    """Pairwise waypoint distances for a stack of trajectory pairs.

    arrays_*: (positions (K, n, 3), quaternions (K, n, 4), grippers (K, n)).
    Returns (K, n, m).
    """
    pos_a, quat_a, grip_a = arrays_a
    pos_b, quat_b, grip_b = arrays_b
    diff = pos_a[:, :, None, :] - pos_b[:, None, :, :]
    pos = np.linalg.norm(diff, axis=-1)
    dot = np.abs(np.einsum("kni,kmi->knm", quat_a, quat_b))
    rot = 2.0 * np.arccos(np.minimum(dot, 1.0))
    grip = (grip_a[:, :, None] != grip_b[:, None, :]).astype(np.float64)
    return weights.position * pos + weights.rotation * rot + weights.gripper * grip


def _warp_batch(d: np.ndarray) -> np.ndarray:
    """Run the warping DP over a (K, n, m) stack of local-distance matrices.

    Tracks (accumulated cost, path length) with cost-then-length lexicographic
    minimization and returns cost / length of the optimal alignment per pair.
    """
    K, n, m = d.shape
    cost = np.empty((K, n, m))
    length = np.empty((K, n, m), dtype=np.int64)
    cost[:, 0, 0] = d[:, 0, 0]
    length[:, 0, 0] = 1
    for j in range(1, m):
        cost[:, 0, j] = cost[:, 0, j - 1] + d[:, 0, j]
        length[:, 0, j] = j + 1
    for i in range(1, n):
        cost[:, i, 0] = cost[:, i - 1, 0] + d[:, i, 0]
        length[:, i, 0] = i + 1
        for j in range(1, m):
            candidates = (
                (cost[:, i - 1, j - 1], length[:, i - 1, j - 1]),
                (cost[:, i - 1, j], length[:, i - 1, j]),
                (cost[:, i, j - 1], length[:, i, j - 1]),
            )
            best_cost = np.minimum(
                np.minimum(candidates[0][0], candidates[1][0]), candidates[2][0]
            )
            best_len = np.full(K, _HUGE_LENGTH, dtype=np.int64)
            for cand_cost, cand_len in candidates:
                best_len = np.where(
                    cand_cost == best_cost, np.minimum(best_len, cand_len), best_len
                )
            cost[:, i, j] = best_cost + d[:, i, j]
            length[:, i, j] = best_len + 1
    return cost[:, -1, -1] / length[:, -1, -1]


def dtw_mt(a: Trajectory, b: Trajectory, weights: DtwWeights | None = None) -> float:
    """Warping distance between two trajectories, normalized by path length."""
    weights = weights or DtwWeights()
    arrays_a = tuple(x[None] for x in _trajectory_arrays(a))
    arrays_b = tuple(x[None] for x in _trajectory_arrays(b))
    d = _local_distance_stack(arrays_a, arrays_b, weights)
    return float(_warp_batch(d)[0])


def dtw_matrix(
    trajectories_a,
    trajectories_b=None,
    weights: DtwWeights | None = None,
    chunk_size: int = 20000,
) -> np.ndarray:
    """All-pairs DTW values, batched by trajectory-length pair.

    With one argument the result is the symmetric matrix over that list (the
    diagonal is exactly zero and only one triangle is computed). Batching
    groups pairs whose length combination matches so the DP can run
    vectorized across pairs.
    """
    weights = weights or DtwWeights()
    symmetric = trajectories_b is None
    trajectories_b = trajectories_a if symmetric else trajectories_b
    arrays_a = [_trajectory_arrays(t) for t in trajectories_a]
    arrays_b = arrays_a if symmetric else [_trajectory_arrays(t) for t in trajectories_b]

    out = np.zeros((len(trajectories_a), len(trajectories_b)))
    groups: dict[tuple[int, int], list[tuple[int, int]]] = defaultdict(list)
    for i, a in enumerate(arrays_a):
        for j, b in enumerate(arrays_b):
            if symmetric and j <= i:
                continue
            groups[(a[0].shape[0], b[0].shape[0])].append((i, j))

    for (n, m), pairs in groups.items():
        for start in range(0, len(pairs), chunk_size):
            chunk = pairs[start : start + chunk_size]
            stack_a = tuple(
                np.stack([arrays_a[i][k] for i, _ in chunk]) for k in range(3)
            )
            stack_b = tuple(
                np.stack([arrays_b[j][k] for _, j in chunk]) for k in range(3)
            )
            d = _local_distance_stack(stack_a, stack_b, weights)
            values = _warp_batch(d)
            rows = np.array([i for i, _ in chunk])
            cols = np.array([j for _, j in chunk])
            out[rows, cols] = values
            if symmetric:
                out[cols, rows] = values
    return out
