"""Desk-scale synthetic dataset generator.

Scenes are a vertical panel with a few parts mounted slightly proud of it,
captured from a sensor out front. Each concept pairs a parametric part shape
with a language template and a canonical manipulation trajectory (approach
from a concept-specific direction, then a concept-specific motion with its
own tool orientation and gripper pattern). Tasks instantiate a concept with
geometric jitter, token dropout, and trajectory noise; demo pools mix noisy
same-concept copies with clearly different cross-concept trajectories.

Concept trajectories are spread far apart on purpose: with the default
trajectory-loss weights, same-concept pairs land well below the accuracy
threshold of 10 and cross-concept pairs well above the dissimilarity
threshold of 20. The generator test suite checks this calibration and it is
re-checked whenever the generator changes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .records import (
    Dataset,
    GRIPPER_STATES,
    Instruction,
    Manual,
    PartFrame,
    Point,
    PointCloud,
    SegmentedPart,
    TaskExample,
    Trajectory,
    Waypoint,
)

SENSOR = np.array([1.5, 0.0, 0.3])
PANEL_Y = (-0.30, 0.30)
PANEL_Z = (0.05, 0.55)
PART_STANDOFF = 0.04  # parts float proud of the panel so clusters separate

_VERBS = ("turn", "pull", "push", "press", "slide", "rotate", "hang", "lift")
_NOUNS = ("knob", "handle", "lever", "button", "slider", "valve", "hook", "latch")
_MODIFIERS = (
    "clockwise",
    "towards you",
    "down",
    "firmly",
    "to the left",
    "counterclockwise",
    "gently",
    "upwards",
)
_FILLER = ("the", "on", "panel", "machine", "to", "start", "it", "now")

# Gripper schedules: (state before the contact keyframe, state after).
_GRIP_PATTERNS = (
    ("open", "closed"),
    ("open", "holding"),
    ("open", "open"),
    ("closed", "closed"),
    ("holding", "open"),
    ("open", "closed"),
    ("closed", "holding"),
    ("holding", "holding"),
)


@dataclass(frozen=True)
class SyntheticConfig:
    """Size and noise knobs of the generated dataset."""

    concepts: int = 4
    tasks_per_concept: int = 10
    demos_per_task: int = 4
    parts_per_scene: int = 2
    geometry_noise: float = 0.001
    language_dropout: float = 0.2
    trajectory_noise: float = 0.004
    rotation_noise: float = 0.02
    include_candidates: bool = True
    include_pointing_hints: bool = False
    plane_spacing: float = 0.006
    part_point_spacing: float = 0.0045
    min_waypoints: int = 8
    max_waypoints: int = 20
    seed: int = 0

    def __post_init__(self):
        for name in ("concepts", "tasks_per_concept", "demos_per_task", "parts_per_scene"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.min_waypoints < 2 or self.max_waypoints < self.min_waypoints:
            raise ValueError("waypoint range must satisfy 2 <= min <= max")


@dataclass
class SyntheticTruth:
    """Generator-side ground truth for tests and calibration checks."""

    task_concept: dict[str, int]
    trajectory_concept: dict[str, int]
    scene_task_ids: dict[str, list[str]]


# -- quaternion helpers -------------------------------------------------------


def _quat_from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = axis / np.linalg.norm(axis)
    half = angle / 2.0
    return np.concatenate([[np.cos(half)], np.sin(half) * axis])


def _quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ]
    )


def _quat_slerp(a: np.ndarray, b: np.ndarray, frac: float) -> np.ndarray:
    dot = float(a @ b)
    if dot < 0:
        b, dot = -b, -dot
    if dot > 1 - 1e-10:
        out = (1 - frac) * a + frac * b
    else:
        theta = np.arccos(min(dot, 1.0))
        out = (np.sin((1 - frac) * theta) * a + np.sin(frac * theta) * b) / np.sin(theta)
    return out / np.linalg.norm(out)


# -- part shapes ---------------------------------------------------------------


def _sphere_points(radius: float, spacing: float) -> np.ndarray:
    count = max(24, int(4 * np.pi * radius**2 / spacing**2))
    k = np.arange(count) + 0.5
    phi = np.arccos(1 - 2 * k / count)
    theta = np.pi * (1 + np.sqrt(5.0)) * k
    return radius * np.column_stack(
        [np.sin(phi) * np.cos(theta), np.sin(phi) * np.sin(theta), np.cos(phi)]
    )


def _box_points(dims: np.ndarray, spacing: float) -> np.ndarray:
    half = dims / 2.0
    points = []
    for axis in range(3):
        u_axis, v_axis = [a for a in range(3) if a != axis]
        u = np.arange(-half[u_axis], half[u_axis] + spacing / 2, spacing)
        v = np.arange(-half[v_axis], half[v_axis] + spacing / 2, spacing)
        uu, vv = np.meshgrid(u, v)
        for sign in (-1.0, 1.0):
            face = np.zeros((uu.size, 3))
            face[:, axis] = sign * half[axis]
            face[:, u_axis] = uu.ravel()
            face[:, v_axis] = vv.ravel()
            points.append(face)
    return np.vstack(points)


def _cylinder_points(radius: float, height: float, spacing: float) -> np.ndarray:
    # Axis along x (poking out of the panel).
    n_theta = max(8, int(2 * np.pi * radius / spacing))
    n_x = max(2, int(height / spacing))
    theta = np.linspace(0, 2 * np.pi, n_theta, endpoint=False)
    xs = np.linspace(-height / 2, height / 2, n_x)
    tt, xx = np.meshgrid(theta, xs)
    lateral = np.column_stack(
        [xx.ravel(), radius * np.cos(tt.ravel()), radius * np.sin(tt.ravel())]
    )
    cap_r = np.arange(spacing, radius, spacing)
    caps = [np.array([[h, 0.0, 0.0]]) for h in (-height / 2, height / 2)]
    for r in cap_r:
        n = max(6, int(2 * np.pi * r / spacing))
        t = np.linspace(0, 2 * np.pi, n, endpoint=False)
        for h in (-height / 2, height / 2):
            caps.append(np.column_stack([np.full(n, h), r * np.cos(t), r * np.sin(t)]))
    return np.vstack([lateral, *caps])


def _torus_points(major: float, minor: float, spacing: float) -> np.ndarray:
    # Ring lying in the yz plane.
    n_u = max(12, int(2 * np.pi * major / spacing))
    n_v = max(6, int(2 * np.pi * minor / spacing))
    u = np.linspace(0, 2 * np.pi, n_u, endpoint=False)
    v = np.linspace(0, 2 * np.pi, n_v, endpoint=False)
    uu, vv = np.meshgrid(u, v)
    ring = major + minor * np.cos(vv)
    return np.column_stack(
        [minor * np.sin(vv.ravel()), (ring * np.cos(uu)).ravel(), (ring * np.sin(uu)).ravel()]
    )


def _hook_points(radius: float, rod: float, spacing: float) -> np.ndarray:
    arc = np.linspace(0, 1.5 * np.pi, max(10, int(1.5 * np.pi * radius / spacing)))
    path = np.column_stack(
        [np.zeros_like(arc), radius * np.cos(arc), radius * np.sin(arc)]
    )
    blobs = [path + blob for blob in _sphere_points(rod, spacing * 0.9)]
    return np.vstack(blobs)


def _l_handle_points(spacing: float) -> np.ndarray:
    bar = _box_points(np.array([0.02, 0.10, 0.02]), spacing)
    stem = _box_points(np.array([0.02, 0.02, 0.05]), spacing) + np.array(
        [0.0, -0.04, -0.035]
    )
    return np.vstack([bar, stem])


def _concept_shape(concept: int, scale: float, spacing: float) -> np.ndarray:
    kind = concept % 8
    if kind == 0:
        return _sphere_points(0.020 * scale, spacing)
    if kind == 1:
        return _box_points(np.array([0.025, 0.10, 0.03]) * scale, spacing)
    if kind == 2:
        return _box_points(np.array([0.02, 0.12, 0.018]) * scale, spacing)
    if kind == 3:
        return _cylinder_points(0.016 * scale, 0.012 * scale, spacing)
    if kind == 4:
        return _box_points(np.array([0.018, 0.014, 0.12]) * scale, spacing)
    if kind == 5:
        return _torus_points(0.030 * scale, 0.008 * scale, spacing)
    if kind == 6:
        return _hook_points(0.028 * scale, 0.006 * scale, spacing)
    return _l_handle_points(spacing) * scale


# -- concept trajectories ------------------------------------------------------


@dataclass(frozen=True)
class _ConceptMotion:
    approach_start: np.ndarray  # part frame, meters
    contact: np.ndarray
    motion_end: np.ndarray
    base_orientation: np.ndarray
    motion_axis: np.ndarray
    motion_angle: float
    grip_before: str
    grip_after: str


def _concept_motion(concept: int, total: int) -> _ConceptMotion:
    """Spread concepts around a ring so their trajectories stay far apart.

    Approach starts, contact offsets on the part, motion directions, tool
    orientations, and gripper schedules all vary with the concept index; the
    scale is chosen so cross-concept trajectory losses sit well above the
    dissimilarity threshold under the default loss weights.
    """
    angle = 2.0 * np.pi * concept / max(total, 1)
    radial = np.array([0.0, np.cos(angle), np.sin(angle)])
    approach_start = np.array([0.45, 0.0, 0.0]) + 1.35 * radial
    contact = np.array(
        [0.02, 0.05 * np.cos(angle + 1.0), 0.05 * np.sin(angle + 1.0)]
    )
    # Motion heads between ring directions, alternating in/out of the panel.
    motion_angle_dir = angle + np.pi / max(total, 1) + np.pi / 2.0
    motion_dir = np.array(
        [0.4 if concept % 2 else -0.2, np.cos(motion_angle_dir), np.sin(motion_angle_dir)]
    )
    motion_dir = motion_dir / np.linalg.norm(motion_dir)
    motion_end = contact + 1.05 * motion_dir
    axes = (np.array([1.0, 0, 0]), np.array([0, 1.0, 0]), np.array([0, 0, 1.0]))
    base = _quat_from_axis_angle(axes[concept % 3], 0.5 + angle / 2.0)
    grip_before, grip_after = _GRIP_PATTERNS[concept % len(_GRIP_PATTERNS)]
    return _ConceptMotion(
        approach_start=approach_start,
        contact=contact,
        motion_end=motion_end,
        base_orientation=base,
        motion_axis=axes[(concept + 1) % 3],
        motion_angle=0.9 + 1.6 * ((concept % 4) / 3.0),
        grip_before=grip_before,
        grip_after=grip_after,
    )


_CONTACT_T = 0.45


def _canonical_pose(motion: _ConceptMotion, t: float):
    """Piecewise-linear position, slerped orientation, stepped gripper at t."""
    if t < _CONTACT_T:
        frac = t / _CONTACT_T
        pos = (1 - frac) * motion.approach_start + frac * motion.contact
        quat = motion.base_orientation
        grip = motion.grip_before
    else:
        frac = (t - _CONTACT_T) / (1.0 - _CONTACT_T)
        pos = (1 - frac) * motion.contact + frac * motion.motion_end
        quat = _quat_slerp(
            motion.base_orientation,
            _quat_multiply(
                _quat_from_axis_angle(motion.motion_axis, motion.motion_angle),
                motion.base_orientation,
            ),
            frac,
        )
        grip = motion.grip_after
    return pos, quat, grip


def _sample_trajectory(
    traj_id: str, motion: _ConceptMotion, config: SyntheticConfig, rng: np.random.Generator
) -> Trajectory:
    count = int(rng.integers(config.min_waypoints, config.max_waypoints + 1))
    ts = np.linspace(0.0, 1.0, count)
    ts = np.clip(ts + rng.normal(0.0, 0.01, count), 0.0, 1.0)
    ts.sort()
    waypoints = []
    for t in ts:
        pos, quat, grip = _canonical_pose(motion, float(t))
        pos = pos + rng.normal(0.0, config.trajectory_noise, 3)
        wobble_axis = rng.normal(size=3)
        wobble = _quat_from_axis_angle(
            wobble_axis, float(rng.normal(0.0, config.rotation_noise))
        )
        quat = _quat_multiply(wobble, quat)
        quat = quat / np.linalg.norm(quat)
        waypoints.append(Waypoint(position=pos, orientation=quat, gripper=grip))
    return Trajectory(traj_id=traj_id, waypoints=tuple(waypoints))


# -- language ------------------------------------------------------------------


def _concept_tokens(concept: int) -> tuple[str, str, str]:
    verb = _VERBS[concept % len(_VERBS)]
    noun = _NOUNS[concept % len(_NOUNS)]
    if concept >= len(_NOUNS):
        noun = f"{noun}{concept // len(_NOUNS) + 1}"
    modifier = _MODIFIERS[concept % len(_MODIFIERS)]
    return verb, noun, modifier


def _sample_text(concept: int, config: SyntheticConfig, rng: np.random.Generator) -> str:
    verb, noun, modifier = _concept_tokens(concept)
    words = []
    if rng.random() >= config.language_dropout:
        words.append(verb)
    words.append(noun)  # the noun always survives so the concept stays named
    if rng.random() >= config.language_dropout:
        words.append(modifier)
    n_filler = int(rng.integers(2, 5))
    filler = list(rng.choice(_FILLER, size=n_filler, replace=True))
    for word in filler:
        words.insert(int(rng.integers(0, len(words) + 1)), str(word))
    return " ".join(words)


# -- scene assembly ------------------------------------------------------------


def _panel_points(config: SyntheticConfig, rng: np.random.Generator) -> np.ndarray:
    ys = np.arange(PANEL_Y[0], PANEL_Y[1], config.plane_spacing)
    zs = np.arange(PANEL_Z[0], PANEL_Z[1], config.plane_spacing)
    yy, zz = np.meshgrid(ys, zs)
    panel = np.column_stack([np.zeros(yy.size), yy.ravel(), zz.ravel()])
    return panel + rng.normal(0.0, config.geometry_noise, panel.shape)


def _part_slots(n: int) -> list[np.ndarray]:
    ys = np.linspace(-0.18, 0.18, n) if n > 1 else np.array([0.0])
    return [
        np.array([PART_STANDOFF, float(y), 0.30 + (0.08 if i % 2 else -0.08)])
        for i, y in enumerate(ys)
    ]


def gen_synthetic_with_truth(config: SyntheticConfig) -> tuple[Dataset, SyntheticTruth]:
    """Generate a dataset plus its concept ground truth."""
    rng = np.random.default_rng(config.seed)
    dataset = Dataset()
    truth = SyntheticTruth(task_concept={}, trajectory_concept={}, scene_task_ids={})

    total_tasks = config.concepts * config.tasks_per_concept
    task_concepts = [t % config.concepts for t in range(total_tasks)]
    n_scenes = int(np.ceil(total_tasks / config.parts_per_scene))
    traj_counter = 0

    for scene_idx in range(n_scenes):
        scene_id = f"scene-{scene_idx:03d}"
        manual_id = f"manual-{scene_idx:03d}"
        members = list(
            range(
                scene_idx * config.parts_per_scene,
                min((scene_idx + 1) * config.parts_per_scene, total_tasks),
            )
        )
        clouds = [_panel_points(config, rng)]
        part_index_ranges = []
        slots = _part_slots(len(members))
        offset = clouds[0].shape[0]
        for slot, task_idx in zip(slots, members):
            concept = task_concepts[task_idx]
            scale = float(rng.uniform(0.85, 1.15))
            shape = _concept_shape(concept, scale, config.part_point_spacing)
            shape = shape + rng.normal(0.0, config.geometry_noise, shape.shape)
            placed = shape + slot
            part_index_ranges.append((offset, offset + placed.shape[0]))
            offset += placed.shape[0]
            clouds.append(placed)
        points = np.vstack(clouds)
        dataset.scenes[scene_id] = PointCloud(
            scene_id=scene_id,
            points=points,
            sensor_origin=Point(*SENSOR),
        )
        dataset.manuals[manual_id] = Manual(manual_id=manual_id, scene_id=scene_id)
        truth.scene_task_ids[scene_id] = []

        scene_candidates: list[np.ndarray] = []
        for step, (slot, task_idx, (lo, hi)) in enumerate(
            zip(slots, members, part_index_ranges)
        ):
            concept = task_concepts[task_idx]
            task_id = f"task-{task_idx:04d}"
            part_id = f"part-{task_idx:04d}"
            instruction_id = f"instr-{task_idx:04d}"
            indices = np.arange(lo, hi, dtype=np.int64)
            centroid = points[indices].mean(axis=0)
            dataset.parts[part_id] = SegmentedPart(
                part_id=part_id,
                scene_id=scene_id,
                point_indices=indices,
                frame=PartFrame(origin=centroid, axes=np.eye(3)),
            )
            dataset.instructions[instruction_id] = Instruction(
                instruction_id=instruction_id,
                manual_id=manual_id,
                step_index=step,
                text=_sample_text(concept, config, rng),
            )

            demo_ids = []
            n_cross = 0 if config.concepts == 1 else config.demos_per_task // 2
            n_same = config.demos_per_task - n_cross
            for d in range(config.demos_per_task):
                traj_id = f"traj-{traj_counter:05d}"
                traj_counter += 1
                if d < n_same:
                    demo_concept = concept
                else:
                    others = [c for c in range(config.concepts) if c != concept]
                    demo_concept = int(others[int(rng.integers(0, len(others)))])
                motion = _concept_motion(demo_concept, config.concepts)
                dataset.trajectories[traj_id] = _sample_trajectory(
                    traj_id, motion, config, rng
                )
                truth.trajectory_concept[traj_id] = demo_concept
                demo_ids.append(traj_id)
            dataset.tasks[task_id] = TaskExample(
                task_id=task_id,
                part_id=part_id,
                instruction_id=instruction_id,
                demo_ids=tuple(demo_ids),
                optimal_demo_id=demo_ids[0],
            )
            truth.task_concept[task_id] = concept
            truth.scene_task_ids[scene_id].append(task_id)

            if config.include_candidates:
                scene_candidates.append(indices.copy())
                keep = rng.random(indices.size) < 0.85
                if keep.sum() >= 3:
                    scene_candidates.append(indices[keep])

        if config.include_candidates:
            panel_size = clouds[0].shape[0]
            panel_pts = points[:panel_size]
            for _ in range(2):
                seed_idx = int(rng.integers(0, panel_size))
                radius = float(rng.uniform(0.03, 0.05))
                dist = np.linalg.norm(panel_pts - panel_pts[seed_idx], axis=1)
                patch = np.flatnonzero(dist < radius).astype(np.int64)
                scene_candidates.append(patch)
            dataset.candidates[scene_id] = scene_candidates

        if config.include_pointing_hints and members:
            first_part = dataset.parts[f"part-{members[0]:04d}"]
            hint = points[first_part.point_indices].mean(axis=0) + np.array(
                [0.0, 0.0, -0.05]
            )
            dataset.pointing_hints[scene_id] = Point(*hint)

    dataset.validate()
    return dataset, truth


def gen_synthetic(config: SyntheticConfig) -> Dataset:
    """Generate a synthetic dataset (deterministic per seed)."""
    return gen_synthetic_with_truth(config)[0]
