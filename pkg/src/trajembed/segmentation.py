"""Object-part candidate generation and per-instruction ranking.

Candidates come from Euclidean clustering of points whose difference of
normals (between a small and a large neighborhood) is high, which suppresses
flat background while keeping protruding part-like structure; clusters too
large for human hands are dropped, and two parameter scales are combined.

Each candidate is scored against a manual step as a product of a geometric
feature factor and two neighbor-similarity terms: one driven by the most
similar training segments (grid cosine), one by the most similar training
instructions (word-bag cosine), each mixing in the paired modality of the
neighbor. Scores are sharpened by the candidate's share of its row marginal
over the manual before taking the per-step argmax.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptySceneError, EmptyTrainingPoolError
from .grids import GridSpec, principal_frame, voxelize
from .records import Dataset, Point, PointCloud
from .features import candidate_part, index_overlap
from .text import Vocabulary, bag_of_words

log = logging.getLogger(__name__)

DEDUPE_IOU = 0.9


@dataclass(frozen=True)
class SegmentationParams:
    """One scale of the candidate-generation pipeline."""

    normal_radius_small: float = 0.01
    normal_radius_large: float = 0.04
    don_threshold: float = 0.2
    cluster_distance: float = 0.01
    max_part_extent: float = 0.25
    min_cluster_size: int = 8

    def __post_init__(self):
        if self.normal_radius_small >= self.normal_radius_large:
            raise ValueError("small normal radius must be below the large one")
        if self.don_threshold <= 0 or self.cluster_distance <= 0:
            raise ValueError("thresholds must be positive")

    def doubled(self) -> "SegmentationParams":
        return SegmentationParams(
            normal_radius_small=2 * self.normal_radius_small,
            normal_radius_large=2 * self.normal_radius_large,
            don_threshold=self.don_threshold,
            cluster_distance=2 * self.cluster_distance,
            max_part_extent=2 * self.max_part_extent,
            min_cluster_size=self.min_cluster_size,
        )


def default_param_sets() -> tuple[SegmentationParams, SegmentationParams]:
    base = SegmentationParams()
    return base, base.doubled()


@dataclass
class CandidateSet:
    """Candidate part segmentations of one scene (index sets into its cloud)."""

    scene_id: str
    candidates: list[np.ndarray]
    skipped_points: int = 0


def estimate_normals(points: np.ndarray, sensor: np.ndarray, radius: float, tree=None):
    """Local plane-fit normals within a radius, oriented toward the sensor.

    Returns (normals (N, 3), valid mask); points with fewer than three
    neighbors get no normal.
    """
    tree = tree or cKDTree(points)
    neighbor_lists = tree.query_ball_point(points, r=radius)
    normals = np.zeros_like(points)
    valid = np.zeros(len(points), dtype=bool)
    for i, neighbors in enumerate(neighbor_lists):
        if len(neighbors) < 3:
            continue
        local = points[neighbors]
        centered = local - local.mean(axis=0)
        _, vecs = np.linalg.eigh(centered.T @ centered)
        normal = vecs[:, 0]  # smallest-variance direction
        if normal @ (sensor - points[i]) < 0:
            normal = -normal
        normals[i] = normal
        valid[i] = True
    return normals, valid


def _euclidean_clusters(points: np.ndarray, indices: np.ndarray, distance: float):
    """Connected components of the survivor points at the given link distance."""
    if len(indices) == 0:
        return []
    tree = cKDTree(points[indices])
    parent = np.arange(len(indices))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in tree.query_pairs(r=distance):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra
    groups: dict[int, list[int]] = {}
    for local_idx in range(len(indices)):
        groups.setdefault(find(local_idx), []).append(local_idx)
    return [indices[np.array(members, dtype=np.int64)] for members in groups.values()]


def _principal_extents(points: np.ndarray) -> np.ndarray:
    frame = principal_frame(points)
    local = frame.to_local(points)
    return local.max(axis=0) - local.min(axis=0)


def generate_candidates(
    scene: PointCloud, param_sets=None
) -> CandidateSet:
    """Difference-of-normals filtering plus Euclidean clustering, two scales.

    Clusters from both parameter sets are combined; near-duplicates
    (overlap > 0.9) are merged. Points with too few neighbors for a normal
    are skipped and counted.
    """
    if len(scene) == 0:
        raise EmptySceneError(f"scene {scene.scene_id!r} has no points")
    param_sets = param_sets or default_param_sets()
    points = scene.points
    sensor = scene.sensor_origin.as_array()
    tree = cKDTree(points)

    candidates: list[np.ndarray] = []
    skipped = 0
    for params in param_sets:
        n_small, valid_small = estimate_normals(
            points, sensor, params.normal_radius_small, tree
        )
        n_large, valid_large = estimate_normals(
            points, sensor, params.normal_radius_large, tree
        )
        valid = valid_small & valid_large
        skipped += int((~valid).sum())
        don = np.linalg.norm(n_small - n_large, axis=1) / 2.0
        survivors = np.flatnonzero(valid & (don > params.don_threshold))
        for cluster in _euclidean_clusters(points, survivors, params.cluster_distance):
            if len(cluster) < params.min_cluster_size:
                continue
            if _principal_extents(points[cluster]).max() > params.max_part_extent:
                continue
            cluster = np.sort(cluster)
            if all(index_overlap(cluster, seen) <= DEDUPE_IOU for seen in candidates):
                candidates.append(cluster)
    return CandidateSet(scene_id=scene.scene_id, candidates=candidates, skipped_points=skipped)


# -- scene context and geometric features ------------------------------------

PERSON_HEIGHT = 1.70
FRONT_PLANE_MAX_ANGLE = np.deg2rad(45.0)


@dataclass(frozen=True)
class SceneContext:
    """Where an imaginary person stands relative to the scene."""

    sensor_origin: np.ndarray
    front_plane_point: np.ndarray
    front_plane_normal: np.ndarray
    person_head: np.ndarray
    pointing_hint: np.ndarray | None = None


def build_scene_context(
    scene: PointCloud,
    pointing_hint: Point | None = None,
    seed: int = 0,
    ransac_iterations: int = 200,
    inlier_distance: float = 0.01,
) -> SceneContext:
    """Detect the scene's front plane and place a 170 cm person before it.

    The plane is RANSAC-fitted with its normal constrained to within 45
    degrees of the centroid-to-sensor line; the person's head sits above the
    plane's inlier centroid at 170 cm over the scene floor (minimum z).
    """
    if len(scene) == 0:
        raise EmptySceneError(f"scene {scene.scene_id!r} has no points")
    points = scene.points
    sensor = scene.sensor_origin.as_array()
    centroid = points.mean(axis=0)
    toward_sensor = sensor - centroid
    toward_sensor = toward_sensor / np.linalg.norm(toward_sensor)

    rng = np.random.default_rng(seed)
    best_inliers, best_normal, best_point = None, None, None
    for _ in range(ransac_iterations):
        pick = rng.choice(len(points), size=3, replace=False)
        a, b, c = points[pick]
        normal = np.cross(b - a, c - a)
        norm = np.linalg.norm(normal)
        if norm < 1e-12:
            continue
        normal = normal / norm
        if normal @ toward_sensor < 0:
            normal = -normal
        if normal @ toward_sensor < np.cos(FRONT_PLANE_MAX_ANGLE):
            continue
        distances = np.abs((points - a) @ normal)
        inliers = distances < inlier_distance
        if best_inliers is None or inliers.sum() > best_inliers.sum():
            best_inliers, best_normal, best_point = inliers, normal, a
    if best_inliers is None:
        # Degenerate scene: fall back to a plane facing the sensor.
        best_normal = toward_sensor
        best_point = centroid
        best_inliers = np.ones(len(points), dtype=bool)

    floor_z = points[:, 2].min()
    anchor = points[best_inliers].mean(axis=0)
    head = np.array([anchor[0], anchor[1], floor_z + PERSON_HEIGHT])
    return SceneContext(
        sensor_origin=sensor,
        front_plane_point=best_point,
        front_plane_normal=best_normal,
        person_head=head,
        pointing_hint=None if pointing_hint is None else pointing_hint.as_array(),
    )


def _point_to_line_distance(point, origin, through) -> float:
    direction = through - origin
    norm = np.linalg.norm(direction)
    if norm == 0.0:
        return float(np.linalg.norm(point - origin))
    direction = direction / norm
    offset = point - origin
    return float(np.linalg.norm(offset - (offset @ direction) * direction))


def geometric_features(
    candidate_points: list[np.ndarray], scene: PointCloud, ctx: SceneContext
) -> np.ndarray:
    """Per-candidate feature rows: reach excess, view-ray distance, hint distance.

    Reach is the head-to-centroid distance minus the minimum over the scene's
    candidates; the view ray runs from the scene centroid to the head; the
    pointing-hint distance is zero when no hint exists.
    """
    centroids = np.stack([pts.mean(axis=0) for pts in candidate_points])
    reach = np.linalg.norm(centroids - ctx.person_head, axis=1)
    reach_excess = reach - reach.min()
    scene_centroid = scene.points.mean(axis=0)
    ray = np.array(
        [
            _point_to_line_distance(c, scene_centroid, ctx.person_head)
            for c in centroids
        ]
    )
    if ctx.pointing_hint is None:
        hint = np.zeros(len(centroids))
    else:
        hint = np.linalg.norm(centroids - ctx.pointing_hint, axis=1)
    return np.column_stack([reach_excess, ray, hint])


# -- ranking ------------------------------------------------------------------


@dataclass(frozen=True)
class RankWeights:
    """Weights of the candidate-ranking score."""

    feature_weights: tuple[float, float, float] = (1.0, 1.0, 1.0)
    beta: float = 0.5
    k_pc: int = 3
    k_lang: int = 3
    no_language_sim: float = 0.2

    def __post_init__(self):
        if self.k_pc < 1 or self.k_lang < 1:
            raise ValueError("neighbor counts must be >= 1")


@dataclass
class RankingPool:
    """Featurized training segments for neighbor lookups.

    Entries are id-sorted; ``bows[i]`` is None for segments that have no
    instruction (non-manipulable training segments).
    """

    ids: list[str]
    grids: np.ndarray  # (M, grid dim)
    bows: list[np.ndarray | None]
    grid_spec: GridSpec
    vocabulary: Vocabulary


def build_ranking_pool(
    dataset: Dataset,
    task_ids,
    vocabulary: Vocabulary,
    grid_spec: GridSpec | None = None,
    include_candidates: bool = True,
) -> RankingPool:
    """Featurize the training segments (and optionally scene candidates)."""
    grid_spec = grid_spec or GridSpec()
    entries: list[tuple[str, np.ndarray, np.ndarray | None]] = []
    seen_parts: set[str] = set()
    for tid in sorted(task_ids):
        task = dataset.tasks[tid]
        if task.part_id in seen_parts:
            continue
        seen_parts.add(task.part_id)
        part = dataset.parts[task.part_id]
        scene = dataset.scenes[part.scene_id]
        grid = voxelize(part, scene, grid_spec).flattened
        bow = bag_of_words(dataset.instructions[task.instruction_id].text, vocabulary)
        entries.append((task.part_id, grid, bow))
    if include_candidates:
        train_scenes = sorted(
            {dataset.parts[dataset.tasks[t].part_id].scene_id for t in task_ids}
        )
        for scene_id in train_scenes:
            scene = dataset.scenes[scene_id]
            for c_idx, cand in enumerate(dataset.candidates.get(scene_id, [])):
                part = candidate_part(scene_id, c_idx, cand, scene.points)
                entries.append(
                    (part.part_id, voxelize(part, scene, grid_spec).flattened, None)
                )
    if not entries:
        raise EmptyTrainingPoolError("ranking needs at least one training segment")
    entries.sort(key=lambda e: e[0])
    return RankingPool(
        ids=[e[0] for e in entries],
        grids=np.stack([e[1] for e in entries]),
        bows=[e[2] for e in entries],
        grid_spec=grid_spec,
        vocabulary=vocabulary,
    )


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    denom = np.linalg.norm(a) * np.linalg.norm(b)
    return float(a @ b / denom) if denom > 0 else 0.0


def _cosine_rows(matrix: np.ndarray, vector: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1) * np.linalg.norm(vector)
    dots = matrix @ vector
    return np.divide(dots, norms, out=np.zeros_like(dots), where=norms > 0)


def _top_k(scores: np.ndarray, ids, k: int) -> list[int]:
    """Indices of the k best scores; ties broken by training-record id."""
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], ids[i]))
    return order[: min(k, len(order))]


def psi_pc(grid: np.ndarray, bow: np.ndarray, pool: RankingPool, rw: RankWeights) -> float:
    """Similarity to the k_pc most identical training segments.

    Each neighbor contributes its grid cosine plus beta times the word-bag
    cosine of its paired instruction; neighbors without an instruction use
    the fixed no_language_sim value instead of the cosine.
    """
    sims = _cosine_rows(pool.grids, grid)
    total = 0.0
    for i in _top_k(sims, pool.ids, rw.k_pc):
        lang_sim = (
            rw.no_language_sim if pool.bows[i] is None else cosine(bow, pool.bows[i])
        )
        total += sims[i] + rw.beta * lang_sim
    return total


def psi_lang(grid: np.ndarray, bow: np.ndarray, pool: RankingPool, rw: RankWeights) -> float:
    """Symmetric term over the k_lang most identical training instructions.

    Only pool entries with language participate; each contributes its word-bag
    cosine plus beta times the grid cosine of its expert segment.
    """
    with_lang = [i for i, b in enumerate(pool.bows) if b is not None]
    if not with_lang:
        return 0.0
    lang_sims = np.array([cosine(bow, pool.bows[i]) for i in with_lang])
    ids = [pool.ids[i] for i in with_lang]
    total = 0.0
    for rank in _top_k(lang_sims, ids, rw.k_lang):
        i = with_lang[rank]
        total += lang_sims[rank] + rw.beta * cosine(grid, pool.grids[i])
    return total


def psi_feat(phi: np.ndarray, rw: RankWeights) -> float:
    """Geometric factor exp(-w . phi); always positive, 1 at zero features."""
    return float(np.exp(-np.asarray(rw.feature_weights) @ phi))


def score_segment(
    grid: np.ndarray,
    bow: np.ndarray,
    pool: RankingPool,
    rw: RankWeights,
    phi: np.ndarray,
) -> float:
    """Full candidate/instruction score, floored at zero."""
    value = psi_feat(phi, rw) * (psi_pc(grid, bow, pool, rw) + psi_lang(grid, bow, pool, rw))
    return max(value, 0.0)


@dataclass
class PartSelection:
    """Ranking output for one scene and manual."""

    candidate_indices: list[np.ndarray]
    raw_scores: np.ndarray  # (n_candidates, n_steps)
    adjusted_scores: np.ndarray
    selected: list[int | None]  # per step; None when every score is zero


def select_parts(
    candidates: CandidateSet,
    scene: PointCloud,
    instructions,
    pool: RankingPool,
    ctx: SceneContext,
    rw: RankWeights | None = None,
) -> PartSelection:
    """Pick the best candidate per manual step.

    Raw scores are adjusted by each candidate's share of its marginal over
    the manual (score^2 / row sum), which suppresses candidates that score
    indiscriminately across steps; ties go to the lower candidate index.
    """
    rw = rw or RankWeights()
    if not candidates.candidates:
        return PartSelection(
            candidate_indices=[],
            raw_scores=np.zeros((0, len(instructions))),
            adjusted_scores=np.zeros((0, len(instructions))),
            selected=[None] * len(instructions),
        )
    cand_points = [scene.points[c] for c in candidates.candidates]
    phi = geometric_features(cand_points, scene, ctx)
    grids = [
        voxelize(
            candidate_part(scene.scene_id, i, c, scene.points), scene, pool.grid_spec
        ).flattened
        for i, c in enumerate(candidates.candidates)
    ]
    bows = [bag_of_words(instr.text, pool.vocabulary) for instr in instructions]

    raw = np.zeros((len(grids), len(instructions)))
    for i, grid in enumerate(grids):
        for j, bow in enumerate(bows):
            raw[i, j] = score_segment(grid, bow, pool, rw, phi[i])

    marginals = raw.sum(axis=1)
    adjusted = np.divide(
        raw**2,
        marginals[:, None],
        out=np.zeros_like(raw),
        where=marginals[:, None] > 0,
    )
    selected: list[int | None] = []
    for j in range(len(instructions)):
        column = adjusted[:, j]
        if column.max() <= 0.0:
            log.warning(
                "scene %s step %d: all candidate scores are zero", scene.scene_id, j
            )
            selected.append(None)
        else:
            selected.append(int(column.argmax()))
    return PartSelection(
        candidate_indices=candidates.candidates,
        raw_scores=raw,
        adjusted_scores=adjusted,
        selected=selected,
    )


def fit_feature_weights(
    dataset: Dataset,
    task_ids,
    pool: RankingPool,
    candidate_grid: tuple[float, ...] = (0.0, 0.5, 1.0, 2.0),
    rw: RankWeights | None = None,
    context_seed: int = 0,
) -> RankWeights:
    """Grid-search the geometric feature weights on training scenes.

    Scores every weight combination by the mean overlap between the top-1
    selection and the expert part across the training scenes, and returns the
    base weights with the best combination installed.
    """
    rw = rw or RankWeights()
    by_manual: dict[str, list[str]] = {}
    for tid in sorted(task_ids):
        instr = dataset.instructions[dataset.tasks[tid].instruction_id]
        by_manual.setdefault(instr.manual_id, []).append(tid)

    prepared = []
    for manual_id, tids in sorted(by_manual.items()):
        scene = dataset.scenes[dataset.manuals[manual_id].scene_id]
        cands = generate_candidates(scene)
        if not cands.candidates:
            continue
        ctx = build_scene_context(
            scene,
            pointing_hint=dataset.pointing_hints.get(scene.scene_id),
            seed=context_seed,
        )
        instructions = [
            dataset.instructions[dataset.tasks[t].instruction_id] for t in tids
        ]
        experts = [dataset.parts[dataset.tasks[t].part_id].point_indices for t in tids]
        prepared.append((scene, cands, ctx, instructions, experts))

    best_weights, best_score = rw.feature_weights, -1.0
    for w0 in candidate_grid:
        for w1 in candidate_grid:
            for w2 in candidate_grid:
                trial = RankWeights(
                    feature_weights=(w0, w1, w2),
                    beta=rw.beta,
                    k_pc=rw.k_pc,
                    k_lang=rw.k_lang,
                    no_language_sim=rw.no_language_sim,
                )
                overlaps = []
                for scene, cands, ctx, instructions, experts in prepared:
                    selection = select_parts(cands, scene, instructions, pool, ctx, trial)
                    for step, expert in enumerate(experts):
                        chosen = selection.selected[step]
                        overlaps.append(
                            0.0
                            if chosen is None
                            else index_overlap(cands.candidates[chosen], expert)
                        )
                score = float(np.mean(overlaps)) if overlaps else 0.0
                if score > best_score:
                    best_score, best_weights = score, (w0, w1, w2)
    return RankWeights(
        feature_weights=best_weights,
        beta=rw.beta,
        k_pc=rw.k_pc,
        k_lang=rw.k_lang,
        no_language_sim=rw.no_language_sim,
    )
