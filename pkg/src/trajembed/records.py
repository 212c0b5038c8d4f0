"""Domain records, the on-disk dataset format, and loading/validation.

A dataset is a line-delimited JSON file: one record per line, each tagged
with a ``kind`` field (scene, part, instruction, trajectory, task, manual)
after a header record carrying the format version. Positions are meters,
quaternions are stored (w, x, y, z). Everything is linked by string ids and
referential integrity is checked exhaustively at load time.

Datasets are immutable after load and safe to share across workers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import IntegrityError, InvariantError, ParseError
from .validation import (
    as_float_array,
    check_orthonormal_axes,
    check_unit_quaternion,
    normalize_quaternion,
)

FORMAT_NAME = "trajembed-dataset"
FORMAT_VERSION = 1

GRIPPER_STATES = ("open", "closed", "holding")


@dataclass(frozen=True)
class Point:
    """A 3-D point in meters (scene frame)."""

    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)

    @staticmethod
    def from_array(arr) -> "Point":
        arr = as_float_array(arr, shape=(3,), name="point")
        return Point(float(arr[0]), float(arr[1]), float(arr[2]))


@dataclass(frozen=True)
class PointCloud:
    """A captured scene: an (N, 3) array of points plus the sensor location."""

    scene_id: str
    points: np.ndarray
    sensor_origin: Point

    def __len__(self) -> int:
        return int(self.points.shape[0])


@dataclass(frozen=True)
class PartFrame:
    """Rigid transform of a part coordinate frame: origin plus row axes."""

    origin: np.ndarray  # (3,)
    axes: np.ndarray  # (3, 3), rows are the part x/y/z axes in scene coords

    def to_local(self, points: np.ndarray) -> np.ndarray:
        """Express scene-frame points in this frame."""
        return (np.atleast_2d(points) - self.origin) @ self.axes.T


@dataclass(frozen=True)
class SegmentedPart:
    """An object part: an index set into its scene cloud plus its frame."""

    part_id: str
    scene_id: str
    point_indices: np.ndarray  # (K,) int64 indices into the scene cloud
    frame: PartFrame


@dataclass(frozen=True)
class Instruction:
    """One free-form natural-language step of a manual."""

    instruction_id: str
    manual_id: str
    step_index: int
    text: str


@dataclass(frozen=True)
class Manual:
    """An ordered list of instruction steps attached to one scene."""

    manual_id: str
    scene_id: str


@dataclass(frozen=True)
class Waypoint:
    """One trajectory sample: position (m), unit quaternion, gripper state."""

    position: np.ndarray  # (3,) in the part frame
    orientation: np.ndarray  # (4,) (w, x, y, z), unit norm
    gripper: str


@dataclass(frozen=True)
class Trajectory:
    """A variable-length sequence of waypoints."""

    traj_id: str
    waypoints: tuple[Waypoint, ...]

    def __len__(self) -> int:
        return len(self.waypoints)

    def positions(self) -> np.ndarray:
        return np.stack([w.position for w in self.waypoints])

    def orientations(self) -> np.ndarray:
        return np.stack([w.orientation for w in self.waypoints])

    def grippers(self) -> np.ndarray:
        return np.array(
            [GRIPPER_STATES.index(w.gripper) for w in self.waypoints], dtype=np.int64
        )


@dataclass(frozen=True)
class TaskExample:
    """A part/instruction pair with its demonstration pool."""

    task_id: str
    part_id: str
    instruction_id: str
    demo_ids: tuple[str, ...]
    optimal_demo_id: str


@dataclass
class Dataset:
    """A fully linked collection of scenes, parts, manuals, and tasks.

    ``candidates`` maps scene ids to optional lists of candidate part
    segmentations (index arrays); ``pointing_hints`` maps scene ids to an
    optional 3-D point a person would indicate for disambiguation.
    """

    scenes: dict[str, PointCloud] = field(default_factory=dict)
    parts: dict[str, SegmentedPart] = field(default_factory=dict)
    manuals: dict[str, Manual] = field(default_factory=dict)
    instructions: dict[str, Instruction] = field(default_factory=dict)
    trajectories: dict[str, Trajectory] = field(default_factory=dict)
    tasks: dict[str, TaskExample] = field(default_factory=dict)
    candidates: dict[str, list[np.ndarray]] = field(default_factory=dict)
    pointing_hints: dict[str, Point] = field(default_factory=dict)

    def part_points(self, part_id: str) -> np.ndarray:
        part = self.parts[part_id]
        return self.scenes[part.scene_id].points[part.point_indices]

    def manual_instructions(self, manual_id: str) -> list[Instruction]:
        steps = [i for i in self.instructions.values() if i.manual_id == manual_id]
        steps.sort(key=lambda i: i.step_index)
        return steps

    def validate(self) -> None:
        """Check referential integrity of every stored id."""
        for part in self.parts.values():
            scene = self.scenes.get(part.scene_id)
            if scene is None:
                raise IntegrityError(
                    f"part {part.part_id!r} references missing scene {part.scene_id!r}"
                )
            if part.point_indices.size and (
                part.point_indices.min() < 0 or part.point_indices.max() >= len(scene)
            ):
                raise IntegrityError(
                    f"part {part.part_id!r} has point indices outside scene "
                    f"{part.scene_id!r} (size {len(scene)})"
                )
        for manual in self.manuals.values():
            if manual.scene_id not in self.scenes:
                raise IntegrityError(
                    f"manual {manual.manual_id!r} references missing scene "
                    f"{manual.scene_id!r}"
                )
        for instr in self.instructions.values():
            if instr.manual_id not in self.manuals:
                raise IntegrityError(
                    f"instruction {instr.instruction_id!r} references missing manual "
                    f"{instr.manual_id!r}"
                )
        for task in self.tasks.values():
            if task.part_id not in self.parts:
                raise IntegrityError(
                    f"task {task.task_id!r} references missing part {task.part_id!r}"
                )
            if task.instruction_id not in self.instructions:
                raise IntegrityError(
                    f"task {task.task_id!r} references missing instruction "
                    f"{task.instruction_id!r}"
                )
            for demo_id in task.demo_ids:
                if demo_id not in self.trajectories:
                    raise IntegrityError(
                        f"task {task.task_id!r} references missing trajectory "
                        f"{demo_id!r}"
                    )
            if task.optimal_demo_id not in task.demo_ids:
                raise IntegrityError(
                    f"task {task.task_id!r}: optimal demo {task.optimal_demo_id!r} "
                    "is not one of its demos"
                )
        for scene_id, cand_list in self.candidates.items():
            scene = self.scenes.get(scene_id)
            if scene is None:
                raise IntegrityError(
                    f"candidate segmentations reference missing scene {scene_id!r}"
                )
            for idx, cand in enumerate(cand_list):
                if cand.size and (cand.min() < 0 or cand.max() >= len(scene)):
                    raise IntegrityError(
                        f"candidate {idx} of scene {scene_id!r} has indices outside "
                        f"the cloud (size {len(scene)})"
                    )
        for scene_id in self.pointing_hints:
            if scene_id not in self.scenes:
                raise IntegrityError(
                    f"pointing hint references missing scene {scene_id!r}"
                )

    def equals(self, other: "Dataset") -> bool:
        """Field-for-field equality, bit-exact on floats."""
        if set(self.scenes) != set(other.scenes):
            return False
        for sid, a in self.scenes.items():
            b = other.scenes[sid]
            if not np.array_equal(a.points, b.points):
                return False
            if a.sensor_origin != b.sensor_origin:
                return False
        if set(self.parts) != set(other.parts):
            return False
        for pid, a in self.parts.items():
            b = other.parts[pid]
            if a.scene_id != b.scene_id:
                return False
            if not np.array_equal(a.point_indices, b.point_indices):
                return False
            if not np.array_equal(a.frame.origin, b.frame.origin):
                return False
            if not np.array_equal(a.frame.axes, b.frame.axes):
                return False
        if self.manuals != other.manuals or self.instructions != other.instructions:
            return False
        if set(self.trajectories) != set(other.trajectories):
            return False
        for tid, a in self.trajectories.items():
            b = other.trajectories[tid]
            if len(a) != len(b):
                return False
            for wa, wb in zip(a.waypoints, b.waypoints):
                if wa.gripper != wb.gripper:
                    return False
                if not np.array_equal(wa.position, wb.position):
                    return False
                if not np.array_equal(wa.orientation, wb.orientation):
                    return False
        if self.tasks != other.tasks:
            return False
        if set(self.candidates) != set(other.candidates):
            return False
        for sid, a_list in self.candidates.items():
            b_list = other.candidates[sid]
            if len(a_list) != len(b_list):
                return False
            for a, b in zip(a_list, b_list):
                if not np.array_equal(a, b):
                    return False
        return self.pointing_hints == other.pointing_hints


def _require(record: dict, key: str, line_number: int):
    if key not in record:
        raise ParseError(f"record missing required field {key!r}", line_number)
    return record[key]


def _parse_waypoint(obj: dict, line_number: int, normalize: bool) -> Waypoint:
    position = as_float_array(
        _require(obj, "position", line_number), shape=(3,), name="waypoint position"
    )
    raw_q = _require(obj, "orientation", line_number)
    if normalize:
        orientation = normalize_quaternion(raw_q, name="waypoint orientation")
    else:
        orientation = check_unit_quaternion(raw_q, name="waypoint orientation")
    gripper = _require(obj, "gripper", line_number)
    if gripper not in GRIPPER_STATES:
        raise InvariantError(
            f"unknown gripper state {gripper!r}; expected one of {GRIPPER_STATES}"
        )
    return Waypoint(position=position, orientation=orientation, gripper=gripper)


def load_dataset(path, normalize_quaternions: bool = False) -> Dataset:
    """Load and validate a line-delimited dataset file.

    Raises ParseError for malformed records (with the offending line number),
    IntegrityError for dangling ids, and InvariantError for records violating
    structural invariants. Non-unit quaternions are rejected unless
    ``normalize_quaternions`` is set, in which case they are rescaled.
    """
    dataset = Dataset()
    seen_header = False
    with open(path, "r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", line_number) from exc
            if not isinstance(record, dict):
                raise ParseError("record is not a JSON object", line_number)
            kind = _require(record, "kind", line_number)

            if kind == "header":
                version = _require(record, "version", line_number)
                if record.get("format") != FORMAT_NAME or version != FORMAT_VERSION:
                    raise ParseError(
                        f"unsupported format {record.get('format')!r} "
                        f"version {version!r}",
                        line_number,
                    )
                seen_header = True
                continue
            if not seen_header:
                raise ParseError("first record must be the format header", line_number)

            try:
                _parse_record(dataset, kind, record, line_number, normalize_quaternions)
            except (InvariantError, ParseError):
                raise
            except (TypeError, ValueError, KeyError) as exc:
                raise ParseError(f"malformed {kind} record: {exc}", line_number) from exc

    if not seen_header:
        raise ParseError("file contains no header record", line_number=1)
    dataset.validate()
    return dataset


def _check_fresh(table: dict, rid: str, kind: str, line_number: int) -> None:
    if rid in table:
        raise ParseError(f"duplicate {kind} id {rid!r}", line_number)


def _parse_record(
    dataset: Dataset, kind: str, record: dict, line_number: int, normalize: bool
) -> None:
    if kind == "scene":
        sid = _require(record, "id", line_number)
        _check_fresh(dataset.scenes, sid, kind, line_number)
        raw_points = _require(record, "points", line_number)
        points = np.asarray(raw_points, dtype=np.float64).reshape(len(raw_points), 3)
        if not np.all(np.isfinite(points)):
            raise InvariantError(f"scene {sid!r}: non-finite point coordinates")
        origin = Point.from_array(_require(record, "sensor_origin", line_number))
        dataset.scenes[sid] = PointCloud(scene_id=sid, points=points, sensor_origin=origin)
        if record.get("pointing_hint") is not None:
            dataset.pointing_hints[sid] = Point.from_array(record["pointing_hint"])
        if record.get("candidates") is not None:
            dataset.candidates[sid] = [
                np.asarray(c, dtype=np.int64) for c in record["candidates"]
            ]
    elif kind == "part":
        pid = _require(record, "id", line_number)
        _check_fresh(dataset.parts, pid, kind, line_number)
        frame_obj = _require(record, "frame", line_number)
        frame = PartFrame(
            origin=as_float_array(frame_obj["origin"], shape=(3,), name="frame origin"),
            axes=check_orthonormal_axes(frame_obj["axes"], name=f"part {pid!r} axes"),
        )
        dataset.parts[pid] = SegmentedPart(
            part_id=pid,
            scene_id=_require(record, "scene_id", line_number),
            point_indices=np.asarray(
                _require(record, "point_indices", line_number), dtype=np.int64
            ),
            frame=frame,
        )
    elif kind == "manual":
        mid = _require(record, "id", line_number)
        _check_fresh(dataset.manuals, mid, kind, line_number)
        dataset.manuals[mid] = Manual(
            manual_id=mid, scene_id=_require(record, "scene_id", line_number)
        )
    elif kind == "instruction":
        iid = _require(record, "id", line_number)
        _check_fresh(dataset.instructions, iid, kind, line_number)
        text = _require(record, "text", line_number)
        if not text:
            raise InvariantError(f"instruction {iid!r}: empty text")
        dataset.instructions[iid] = Instruction(
            instruction_id=iid,
            manual_id=_require(record, "manual_id", line_number),
            step_index=int(_require(record, "step_index", line_number)),
            text=text,
        )
    elif kind == "trajectory":
        tid = _require(record, "id", line_number)
        _check_fresh(dataset.trajectories, tid, kind, line_number)
        raw_waypoints = _require(record, "waypoints", line_number)
        if len(raw_waypoints) < 1:
            raise InvariantError(f"trajectory {tid!r}: needs at least one waypoint")
        waypoints = tuple(
            _parse_waypoint(w, line_number, normalize) for w in raw_waypoints
        )
        dataset.trajectories[tid] = Trajectory(traj_id=tid, waypoints=waypoints)
    elif kind == "task":
        tid = _require(record, "id", line_number)
        _check_fresh(dataset.tasks, tid, kind, line_number)
        dataset.tasks[tid] = TaskExample(
            task_id=tid,
            part_id=_require(record, "part_id", line_number),
            instruction_id=_require(record, "instruction_id", line_number),
            demo_ids=tuple(_require(record, "demo_ids", line_number)),
            optimal_demo_id=_require(record, "optimal_demo_id", line_number),
        )
    else:
        raise ParseError(f"unknown record kind {kind!r}", line_number)


def save_dataset(dataset: Dataset, path) -> None:
    """Write a dataset to ``path`` in the line-delimited record format.

    load(save(d)) round-trips bit-exactly; records are sorted by id so the
    output is deterministic.
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            json.dumps({"kind": "header", "format": FORMAT_NAME, "version": FORMAT_VERSION})
            + "\n"
        )
        for sid in sorted(dataset.scenes):
            scene = dataset.scenes[sid]
            record = {
                "kind": "scene",
                "id": sid,
                "sensor_origin": list(scene.sensor_origin.as_array()),
                "points": scene.points.tolist(),
            }
            if sid in dataset.pointing_hints:
                record["pointing_hint"] = list(dataset.pointing_hints[sid].as_array())
            if sid in dataset.candidates:
                record["candidates"] = [c.tolist() for c in dataset.candidates[sid]]
            fh.write(json.dumps(record) + "\n")
        for pid in sorted(dataset.parts):
            part = dataset.parts[pid]
            fh.write(
                json.dumps(
                    {
                        "kind": "part",
                        "id": pid,
                        "scene_id": part.scene_id,
                        "point_indices": part.point_indices.tolist(),
                        "frame": {
                            "origin": part.frame.origin.tolist(),
                            "axes": part.frame.axes.tolist(),
                        },
                    }
                )
                + "\n"
            )
        for mid in sorted(dataset.manuals):
            manual = dataset.manuals[mid]
            fh.write(
                json.dumps({"kind": "manual", "id": mid, "scene_id": manual.scene_id})
                + "\n"
            )
        for iid in sorted(dataset.instructions):
            instr = dataset.instructions[iid]
            fh.write(
                json.dumps(
                    {
                        "kind": "instruction",
                        "id": iid,
                        "manual_id": instr.manual_id,
                        "step_index": instr.step_index,
                        "text": instr.text,
                    }
                )
                + "\n"
            )
        for tid in sorted(dataset.trajectories):
            traj = dataset.trajectories[tid]
            fh.write(
                json.dumps(
                    {
                        "kind": "trajectory",
                        "id": tid,
                        "waypoints": [
                            {
                                "position": w.position.tolist(),
                                "orientation": w.orientation.tolist(),
                                "gripper": w.gripper,
                            }
                            for w in traj.waypoints
                        ],
                    }
                )
                + "\n"
            )
        for tid in sorted(dataset.tasks):
            task = dataset.tasks[tid]
            fh.write(
                json.dumps(
                    {
                        "kind": "task",
                        "id": tid,
                        "part_id": task.part_id,
                        "instruction_id": task.instruction_id,
                        "demo_ids": list(task.demo_ids),
                        "optimal_demo_id": task.optimal_demo_id,
                    }
                )
                + "\n"
            )
