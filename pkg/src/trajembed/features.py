"""Dataset-to-array plumbing shared by training, evaluation, and the CLI.

Builds, for a chosen set of tasks: flattened grid pairs for every expert part
(and, optionally, for candidate segmentations that overlap them), word bags
against a training vocabulary, flattened normalized trajectories for the
demo pool, and the pairwise trajectory-loss matrix over that pool.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .dtw import DtwWeights, dtw_matrix
from .grids import CompactGridConfig, compact_grids, principal_frame
from .records import Dataset, SegmentedPart
from .text import Vocabulary, bag_of_words
from .trajectories import normalize_trajectory

log = logging.getLogger(__name__)

CANDIDATE_VIEW_IOU = 0.5


def index_overlap(a: np.ndarray, b: np.ndarray) -> float:
    """Jaccard overlap of two point-index sets."""
    set_a, set_b = set(a.tolist()), set(b.tolist())
    union = len(set_a | set_b)
    return len(set_a & set_b) / union if union else 0.0


def candidate_part(scene_id: str, index: int, indices: np.ndarray, points) -> SegmentedPart:
    """Wrap a candidate segmentation as a part with a principal-axes frame."""
    return SegmentedPart(
        part_id=f"{scene_id}/candidate-{index}",
        scene_id=scene_id,
        point_indices=indices,
        frame=principal_frame(points[indices]),
    )


@dataclass
class TrainingData:
    """Featurized view of one training fold."""

    task_ids: list[str]
    pool_ids: list[str]
    pool_features: np.ndarray  # (P, 150)
    delta: np.ndarray  # (P, P) pairwise trajectory loss
    task_grids: list[list[np.ndarray]]  # per task: expert view, then candidate views
    task_bows: np.ndarray  # (N, |V|)
    optimal_index: np.ndarray  # (N,) pool index of each task's optimal demo
    lang_instruction_ids: list[str]  # sorted mining pool of instruction ids
    lang_bows: np.ndarray  # (L, |V|)
    lang_optimal_index: np.ndarray  # (L,) pool index of each instruction's optimal demo
    sda_grids: np.ndarray  # (G, grid dim) every view plus every scene candidate
    vocabulary: Vocabulary

    @property
    def pool_size(self) -> int:
        return len(self.pool_ids)


def build_training_data(
    dataset: Dataset,
    task_ids,
    vocabulary: Vocabulary,
    grid_config: CompactGridConfig | None = None,
    dtw_weights: DtwWeights | None = None,
    resample_mode: str = "index",
    use_candidate_views: bool = True,
) -> TrainingData:
    """Featurize the tasks, their demo pool, and optional candidate views."""
    grid_config = grid_config or CompactGridConfig()
    task_ids = sorted(task_ids)

    pool_ids = sorted({d for tid in task_ids for d in dataset.tasks[tid].demo_ids})
    pool_trajs = [dataset.trajectories[t] for t in pool_ids]
    pool_features = np.stack(
        [normalize_trajectory(t, mode=resample_mode).flattened for t in pool_trajs]
    )
    delta = dtw_matrix(pool_trajs, weights=dtw_weights)
    pool_index = {t: i for i, t in enumerate(pool_ids)}

    # The grid depends on the index set and the part frame, so cache by both
    # (a candidate that duplicates the expert part still differs in frame).
    content_cache: dict[tuple, np.ndarray] = {}

    def _cached_grid(part: SegmentedPart, scene) -> np.ndarray:
        key = (
            part.scene_id,
            np.sort(part.point_indices).tobytes(),
            part.frame.origin.tobytes(),
            part.frame.axes.tobytes(),
        )
        if key not in content_cache:
            content_cache[key] = compact_grids(part, scene, grid_config).flattened
        return content_cache[key]

    def expert_grid(part_id: str) -> np.ndarray:
        part = dataset.parts[part_id]
        return _cached_grid(part, dataset.scenes[part.scene_id])

    def candidate_grid(scene_id: str, index: int) -> np.ndarray:
        scene = dataset.scenes[scene_id]
        part = candidate_part(
            scene_id, index, dataset.candidates[scene_id][index], scene.points
        )
        return _cached_grid(part, scene)

    task_grids: list[list[np.ndarray]] = []
    task_bows = []
    optimal_index = []
    for tid in task_ids:
        task = dataset.tasks[tid]
        views = [expert_grid(task.part_id)]
        if use_candidate_views:
            part = dataset.parts[task.part_id]
            for c_idx, cand in enumerate(dataset.candidates.get(part.scene_id, [])):
                if index_overlap(cand, part.point_indices) >= CANDIDATE_VIEW_IOU:
                    views.append(candidate_grid(part.scene_id, c_idx))
        task_grids.append(views)
        task_bows.append(
            bag_of_words(dataset.instructions[task.instruction_id].text, vocabulary)
        )
        optimal_index.append(pool_index[task.optimal_demo_id])

    # Language mining pool: every training instruction, tied to the optimal
    # trajectory of the (id-sorted first) task that uses it.
    instruction_to_optimal: dict[str, int] = {}
    for tid in task_ids:
        task = dataset.tasks[tid]
        instruction_to_optimal.setdefault(
            task.instruction_id, pool_index[task.optimal_demo_id]
        )
    lang_instruction_ids = sorted(instruction_to_optimal)
    lang_bows = np.stack(
        [
            bag_of_words(dataset.instructions[iid].text, vocabulary)
            for iid in lang_instruction_ids
        ]
    )
    lang_optimal_index = np.array(
        [instruction_to_optimal[iid] for iid in lang_instruction_ids], dtype=np.int64
    )

    # Unsupervised reconstruction pool: every task view plus, when candidate
    # views are enabled, every candidate segmentation of every training scene.
    sda_rows = [grid for views in task_grids for grid in views]
    if use_candidate_views:
        train_scenes = sorted(
            {dataset.parts[dataset.tasks[t].part_id].scene_id for t in task_ids}
        )
        for scene_id in train_scenes:
            for c_idx in range(len(dataset.candidates.get(scene_id, []))):
                sda_rows.append(candidate_grid(scene_id, c_idx))

    return TrainingData(
        task_ids=task_ids,
        pool_ids=pool_ids,
        pool_features=pool_features,
        delta=delta,
        task_grids=task_grids,
        task_bows=np.stack(task_bows),
        optimal_index=np.array(optimal_index, dtype=np.int64),
        lang_instruction_ids=lang_instruction_ids,
        lang_bows=lang_bows,
        lang_optimal_index=lang_optimal_index,
        sda_grids=np.stack(sda_rows),
        vocabulary=vocabulary,
    )


def task_feature_matrix(
    dataset: Dataset,
    task_ids,
    vocabulary: Vocabulary,
    grid_config: CompactGridConfig | None = None,
):
    """Expert grid and word-bag matrices for a list of tasks (e.g. a test fold)."""
    grid_config = grid_config or CompactGridConfig()
    grids, bows = [], []
    cache: dict[str, np.ndarray] = {}
    for tid in task_ids:
        task = dataset.tasks[tid]
        if task.part_id not in cache:
            part = dataset.parts[task.part_id]
            scene = dataset.scenes[part.scene_id]
            cache[task.part_id] = compact_grids(part, scene, grid_config).flattened
        grids.append(cache[task.part_id])
        bows.append(
            bag_of_words(dataset.instructions[task.instruction_id].text, vocabulary)
        )
    return np.stack(grids), np.stack(bows)
