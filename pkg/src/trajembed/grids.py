"""Real-valued occupancy-grid featurization of object parts.

A part is voxelized into a cube of cells centered on its centroid and aligned
with its frame. Point counts are smoothed into the 26 neighboring cells with
an exponential falloff, normalized so the strongest part cell reads 1.0, and
surrounding scene structure is marked with a fixed context value: cells that
hold nearby scene-only points, plus cells behind them along the ray from the
sensor (so hollow walls and tables read as solid).

The embedding consumes a compact pair of 10x10x10 grids (coarse and fine
extent) produced by block-averaging full-resolution grids.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np
from scipy.spatial import cKDTree
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import EmptyPartError
from .records import PartFrame, PointCloud, SegmentedPart
from .validation import check_orthonormal_axes

# All 26 cube-neighbor index offsets.
_NEIGHBOR_OFFSETS = np.array(
    [
        (dx, dy, dz)
        for dx in (-1, 0, 1)
        for dy in (-1, 0, 1)
        for dz in (-1, 0, 1)
        if (dx, dy, dz) != (0, 0, 0)
    ],
    dtype=np.int64,
)


def principal_frame(points: np.ndarray) -> PartFrame:
    """Principal-axes frame of a point set with a deterministic sign choice.

    Axes are covariance eigenvectors sorted by descending variance; each of
    the first two is flipped so its largest-magnitude component is positive,
    and the third completes a right-handed frame.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    center = points.mean(axis=0)
    if points.shape[0] < 3:
        return PartFrame(origin=center, axes=np.eye(3))
    centered = points - center
    _, eigvecs = np.linalg.eigh(centered.T @ centered)
    axes = eigvecs[:, ::-1].T.copy()
    for i in range(2):
        dominant = int(np.argmax(np.abs(axes[i])))
        if axes[i, dominant] < 0:
            axes[i] = -axes[i]
    axes[2] = np.cross(axes[0], axes[1])
    return PartFrame(origin=center, axes=axes)


@dataclass(frozen=True)
class GridSpec:
    """Geometry and smoothing parameters of one occupancy grid.

    smoothing_decay is the exponential rate per meter; the default of
    2.0 per cell keeps the neighbor falloff scale-free across cell sizes.
    """

    cells_per_side: int = 100
    cell_size: float = 0.0025
    smoothing_decay: float | None = None
    context_value: float = 0.2
    context_radius: float = 0.05

    def __post_init__(self):
        if self.cells_per_side < 1:
            raise ValueError("cells_per_side must be >= 1")
        if self.cell_size <= 0:
            raise ValueError("cell_size must be positive")
        if not 0.0 <= self.context_value <= 1.0:
            raise ValueError("context_value must be in [0, 1]")
        if self.smoothing_decay is None:
            object.__setattr__(self, "smoothing_decay", 2.0 / self.cell_size)

    @property
    def extent(self) -> float:
        return self.cells_per_side * self.cell_size


@dataclass(frozen=True)
class OccupancyGrid:
    """A dense cube of cell values in [0, 1]."""

    spec: GridSpec
    values: np.ndarray  # (n, n, n)

    @property
    def flattened(self) -> np.ndarray:
        return self.values.ravel()


def _local_coordinates(part: SegmentedPart, scene: PointCloud):
    """Scene points, sensor, and grid center expressed in the part-aligned frame."""
    axes = check_orthonormal_axes(part.frame.axes, name=f"part {part.part_id!r} axes")
    part_points = scene.points[part.point_indices]
    center = part_points.mean(axis=0)
    local_points = (scene.points - center) @ axes.T
    local_sensor = (scene.sensor_origin.as_array() - center) @ axes.T
    return local_points, local_sensor


def _cell_indices(local: np.ndarray, spec: GridSpec):
    """Cell index per point plus an in-bounds mask."""
    half = spec.extent / 2.0
    idx = np.floor((local + half) / spec.cell_size).astype(np.int64)
    in_bounds = np.all((idx >= 0) & (idx < spec.cells_per_side), axis=1)
    return idx, in_bounds


def _cell_centers(idx: np.ndarray, spec: GridSpec) -> np.ndarray:
    half = spec.extent / 2.0
    return (idx + 0.5) * spec.cell_size - half


def _ray_fill_cells(seed_cells: np.ndarray, sensor: np.ndarray, spec: GridSpec):
    """Cells crossed by sensor rays beyond each seed cell, to the grid edge.

    Standard axis-stepping voxel traversal, marched for all rays in lockstep:
    each iteration advances every live ray one cell along its smallest next
    boundary crossing and marks the entered cell.
    """
    n = spec.cells_per_side
    half = spec.extent / 2.0
    filled = np.zeros((n, n, n), dtype=bool)

    centers = (seed_cells + 0.5) * spec.cell_size - half
    directions = centers - sensor
    lengths = np.linalg.norm(directions, axis=1)
    live = lengths > 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_u = np.where(directions != 0.0, lengths[:, None] / directions, np.inf)
    ijk = seed_cells.copy()
    step = np.where(directions > 0, 1, -1)
    # Parameter at which each ray crosses the next cell boundary per axis.
    boundary = (ijk + (step > 0)) * spec.cell_size - half
    t_max = np.where(
        directions != 0.0, (boundary - sensor) * inv_u, np.inf
    )
    t_delta = np.abs(spec.cell_size * inv_u)

    rows = np.arange(len(seed_cells))
    while live.any():
        idx = rows[live]
        axis = np.argmin(t_max[idx], axis=1)
        ijk[idx, axis] += step[idx, axis]
        moved = ijk[idx, axis]
        inside = (moved >= 0) & (moved < n)
        ok = idx[inside]
        filled[ijk[ok, 0], ijk[ok, 1], ijk[ok, 2]] = True
        t_max[ok, axis[inside]] += t_delta[ok, axis[inside]]
        live[idx[~inside]] = False
    return filled


def voxelize(part: SegmentedPart, scene: PointCloud, spec: GridSpec) -> OccupancyGrid:
    """Build the real-valued occupancy grid of a part within its scene.

    Steps, in order: (1) accumulate one count per part point into its cell and
    exp(-decay * d) into each of the 26 neighbor cells at center distance d;
    (2) divide by the maximum so the strongest part cell reads 1.0; (3) raise
    cells holding only nearby scene points, and cells behind them along the
    sensor ray, to the context value unless a larger part-derived value is
    already present.
    """
    if part.point_indices.size == 0:
        raise EmptyPartError(f"part {part.part_id!r} has an empty point set")
    local_points, local_sensor = _local_coordinates(part, scene)
    n = spec.cells_per_side

    part_mask = np.zeros(len(scene), dtype=bool)
    part_mask[part.point_indices] = True
    part_local = local_points[part_mask]

    idx, in_bounds = _cell_indices(part_local, spec)
    if not in_bounds.any():
        raise EmptyPartError(
            f"part {part.part_id!r}: no points fall inside the {n}^3 grid"
        )
    grid = np.zeros((n, n, n), dtype=np.float64)
    pts = part_local[in_bounds]
    cells = idx[in_bounds]
    np.add.at(grid, (cells[:, 0], cells[:, 1], cells[:, 2]), 1.0)
    for offset in _NEIGHBOR_OFFSETS:
        neighbor = cells + offset
        ok = np.all((neighbor >= 0) & (neighbor < n), axis=1)
        if not ok.any():
            continue
        centers = _cell_centers(neighbor[ok], spec)
        dist = np.linalg.norm(pts[ok] - centers, axis=1)
        weights = np.exp(-spec.smoothing_decay * dist)
        np.add.at(grid, (neighbor[ok, 0], neighbor[ok, 1], neighbor[ok, 2]), weights)

    grid /= grid.max()

    part_cells = np.zeros((n, n, n), dtype=bool)
    part_cells[cells[:, 0], cells[:, 1], cells[:, 2]] = True

    scene_local = local_points[~part_mask]
    if scene_local.shape[0]:
        near = (
            cKDTree(part_local).query(scene_local, k=1)[0] <= spec.context_radius
        )
        ctx_idx, ctx_bounds = _cell_indices(scene_local[near], spec)
        ctx_cells = np.unique(ctx_idx[ctx_bounds], axis=0)
        if ctx_cells.size:
            context = np.zeros((n, n, n), dtype=bool)
            context[ctx_cells[:, 0], ctx_cells[:, 1], ctx_cells[:, 2]] = True
            context |= _ray_fill_cells(ctx_cells, local_sensor, spec)
            context &= ~part_cells
            np.maximum(grid, np.where(context, spec.context_value, 0.0), out=grid)
    return OccupancyGrid(spec=spec, values=grid)


def block_average(values: np.ndarray, factor: int) -> np.ndarray:
    """Average non-overlapping factor^3 blocks of a cubic grid."""
    n = values.shape[0]
    if n % factor:
        raise ValueError(f"grid side {n} is not divisible by block factor {factor}")
    m = n // factor
    return values.reshape(m, factor, m, factor, m, factor).mean(axis=(1, 3, 5))


@dataclass(frozen=True)
class CompactGridConfig:
    """Sizes of the coarse/fine compact grid pair fed to the network."""

    cells_per_side: int = 10
    coarse_cell_size: float = 0.025
    fine_cell_size: float = 0.01
    base_cell_size: float = 0.0025
    smoothing_decay: float | None = None
    context_value: float = 0.2
    context_radius: float = 0.05

    def base_spec(self, compact_cell_size: float) -> GridSpec:
        factor = round(compact_cell_size / self.base_cell_size)
        return GridSpec(
            cells_per_side=self.cells_per_side * factor,
            cell_size=self.base_cell_size,
            smoothing_decay=self.smoothing_decay,
            context_value=self.context_value,
            context_radius=self.context_radius,
        )

    @property
    def flat_dim(self) -> int:
        return 2 * self.cells_per_side**3


@dataclass(frozen=True)
class CompactGridPair:
    """Block-averaged coarse and fine grids plus their fixed-order flattening."""

    coarse: OccupancyGrid
    fine: OccupancyGrid
    flattened: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(
            self,
            "flattened",
            np.concatenate([self.coarse.flattened, self.fine.flattened]),
        )


def compact_grids(
    part: SegmentedPart, scene: PointCloud, config: CompactGridConfig | None = None
) -> CompactGridPair:
    """Build the compact coarse/fine grid pair by block-averaging full grids.

    The coarse grid covers the full part extent, the fine grid the inner
    region; both are reduced to config.cells_per_side per edge.
    """
    config = config or CompactGridConfig()
    out = []
    for compact_cell in (config.coarse_cell_size, config.fine_cell_size):
        base = config.base_spec(compact_cell)
        factor = base.cells_per_side // config.cells_per_side
        full = voxelize(part, scene, base)
        compact_spec = GridSpec(
            cells_per_side=config.cells_per_side,
            cell_size=compact_cell,
            smoothing_decay=base.smoothing_decay,
            context_value=base.context_value,
            context_radius=base.context_radius,
        )
        out.append(
            OccupancyGrid(spec=compact_spec, values=block_average(full.values, factor))
        )
    return CompactGridPair(coarse=out[0], fine=out[1])


class PartGridEncoder(BaseEstimator, TransformerMixin):
    """Sklearn-style encoder from (part, scene) pairs to flattened grid pairs."""

    def __init__(
        self,
        cells_per_side: int = 10,
        coarse_cell_size: float = 0.025,
        fine_cell_size: float = 0.01,
        base_cell_size: float = 0.0025,
        smoothing_decay: float | None = None,
        context_value: float = 0.2,
        context_radius: float = 0.05,
    ):
        self.cells_per_side = cells_per_side
        self.coarse_cell_size = coarse_cell_size
        self.fine_cell_size = fine_cell_size
        self.base_cell_size = base_cell_size
        self.smoothing_decay = smoothing_decay
        self.context_value = context_value
        self.context_radius = context_radius

    def _config(self) -> CompactGridConfig:
        return CompactGridConfig(
            **{f.name: getattr(self, f.name) for f in fields(CompactGridConfig)}
        )

    def fit(self, X, y=None):
        return self

    def transform(self, X) -> np.ndarray:
        config = self._config()
        return np.stack(
            [compact_grids(part, scene, config).flattened for part, scene in X]
        )
