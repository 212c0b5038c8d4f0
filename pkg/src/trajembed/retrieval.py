"""Pre-embedded trajectory library and fast nearest-trajectory inference.

Inference embeds the new part/instruction pair once and takes the argmax of
dot products against a cached matrix of trajectory embeddings, instead of
re-running the trajectory branch on the whole library per query. The index is
an exact cache, not an approximation: infer and infer_exhaustive agree on
every query. An index records the fingerprint of the model it was built
from, so a stale index fails loudly instead of silently mis-ranking.
"""

from __future__ import annotations

import json
import struct
import time
from dataclasses import dataclass

import numpy as np

from .embedding import EmbeddingNet
from .errors import CheckpointError, EmptyLibraryError, FingerprintMismatchError
from .trajectories import normalize_trajectory

INDEX_MAGIC = b"TJIX"
INDEX_VERSION = 1


@dataclass(frozen=True)
class TrajectoryLibrary:
    """Preprocessed (normalized, flattened) trajectories, id-sorted."""

    ids: tuple[str, ...]
    features: np.ndarray  # (N, 150)

    @staticmethod
    def from_trajectories(trajectories, resample_mode: str = "index") -> "TrajectoryLibrary":
        trajectories = sorted(trajectories, key=lambda t: t.traj_id)
        if not trajectories:
            raise EmptyLibraryError("trajectory library is empty")
        features = np.stack(
            [normalize_trajectory(t, mode=resample_mode).flattened for t in trajectories]
        )
        return TrajectoryLibrary(
            ids=tuple(t.traj_id for t in trajectories), features=features
        )


@dataclass(frozen=True)
class TrajectoryIndex:
    """Immutable matrix of pre-embedded trajectories plus the model fingerprint."""

    ids: tuple[str, ...]
    matrix: np.ndarray  # (N, embed dim)
    fingerprint: str

    def __len__(self) -> int:
        return len(self.ids)

    def check_model(self, net: EmbeddingNet) -> None:
        if net.fingerprint() != self.fingerprint:
            raise FingerprintMismatchError(
                "index was built from a different model checkpoint"
            )


def build_index(net: EmbeddingNet, trajectories) -> TrajectoryIndex:
    """Embed every library trajectory once and freeze the result.

    ``trajectories`` may be Trajectory records or a prepared TrajectoryLibrary.
    """
    library = (
        trajectories
        if isinstance(trajectories, TrajectoryLibrary)
        else TrajectoryLibrary.from_trajectories(trajectories, net.resample_mode)
    )
    return TrajectoryIndex(
        ids=library.ids,
        matrix=net.embed_traj(library.features),
        fingerprint=net.fingerprint(),
    )


def _argmax_smallest_id(ids, scores: np.ndarray) -> tuple[str, float]:
    best = scores.max()
    # ids are sorted, so the first maximum is the smallest id.
    return ids[int(np.argmax(scores))], float(best)


def infer(
    index: TrajectoryIndex,
    net: EmbeddingNet,
    grid,
    bow,
    verify_fingerprint: bool = True,
) -> tuple[str, float]:
    """Embed the task once and return (best trajectory id, its similarity).

    Ties go to the smallest trajectory id. ``verify_fingerprint`` can be
    disabled by callers that validated the index against the model up front
    (the benchmark does, to keep hashing out of the timed path).
    """
    if verify_fingerprint:
        index.check_model(net)
    task_emb = net.embed_task(grid, bow)
    return _argmax_smallest_id(index.ids, index.matrix @ task_emb)


def infer_exhaustive(
    net: EmbeddingNet, library, grid, bow
) -> tuple[str, float]:
    """Reference inference that re-embeds every trajectory for this query.

    Same argmax contract as infer(). Each trajectory is projected through the
    network individually, per query, with nothing cached: that keeps this
    function independent of the batched projection used to build the index
    (so it can serve as a correctness oracle for it) and mirrors the per-pair
    network evaluation of the approach the pre-embedded index replaces, which
    is what the benchmark compares against.
    """
    if not isinstance(library, TrajectoryLibrary):
        library = TrajectoryLibrary.from_trajectories(library, net.resample_mode)
    task_emb = net.embed_task(grid, bow)
    scores = np.empty(len(library.ids))
    for i, features in enumerate(library.features):
        scores[i] = net.traj_stack.output(features) @ task_emb
    return _argmax_smallest_id(library.ids, scores)


@dataclass(frozen=True)
class BenchReport:
    """Per-query latency statistics for both inference paths."""

    repetitions: int
    library_size: int
    fast_times: np.ndarray  # seconds per query
    exhaustive_times: np.ndarray

    def _stats(self, times: np.ndarray) -> dict:
        return {
            "mean_ms": float(times.mean() * 1e3),
            "median_ms": float(np.median(times) * 1e3),
            "p99_ms": float(np.percentile(times, 99) * 1e3),
            "total_ms": float(times.sum() * 1e3),
        }

    @property
    def speedup(self) -> float:
        return float(self.exhaustive_times.mean() / self.fast_times.mean())

    def rows(self) -> list[dict]:
        fast = {"method": "pre_embedded", "repetitions": self.repetitions}
        fast.update(self._stats(self.fast_times))
        exhaustive = {"method": "exhaustive", "repetitions": self.repetitions}
        exhaustive.update(self._stats(self.exhaustive_times))
        return [fast, exhaustive]

    def to_tsv(self) -> str:
        columns = ("method", "repetitions", "mean_ms", "median_ms", "p99_ms", "total_ms")
        lines = ["\t".join(columns)]
        for row in self.rows():
            lines.append(
                "\t".join(
                    f"{row[c]:.6f}" if isinstance(row[c], float) else str(row[c])
                    for c in columns
                )
            )
        lines.append(f"# speedup\t{self.speedup:.2f}")
        return "\n".join(lines) + "\n"


def bench(
    index: TrajectoryIndex,
    net: EmbeddingNet,
    library: TrajectoryLibrary,
    queries,
    repetitions: int = 10000,
    warmup: int = 32,
) -> BenchReport:
    """Time pre-embedded inference against exhaustive per-query embedding.

    ``queries`` is a sequence of already-featurized (grid vector, word bag)
    pairs; preprocessing stays outside the timed region, matching how the
    index itself is prepared offline. Queries are cycled through for the
    requested number of repetitions after a short warmup of both paths.
    """
    index.check_model(net)
    queries = list(queries)
    for grid, bow in queries[: min(warmup, len(queries))]:
        infer(index, net, grid, bow, verify_fingerprint=False)
        infer_exhaustive(net, library, grid, bow)

    fast = np.empty(repetitions)
    for r in range(repetitions):
        grid, bow = queries[r % len(queries)]
        start = time.perf_counter()
        infer(index, net, grid, bow, verify_fingerprint=False)
        fast[r] = time.perf_counter() - start

    exhaustive = np.empty(repetitions)
    for r in range(repetitions):
        grid, bow = queries[r % len(queries)]
        start = time.perf_counter()
        infer_exhaustive(net, library, grid, bow)
        exhaustive[r] = time.perf_counter() - start

    return BenchReport(
        repetitions=repetitions,
        library_size=len(index),
        fast_times=fast,
        exhaustive_times=exhaustive,
    )


def save_index(index: TrajectoryIndex, path) -> None:
    """Write the index: JSON header plus little-endian float64 matrix."""
    header = {
        "version": INDEX_VERSION,
        "ids": list(index.ids),
        "fingerprint": index.fingerprint,
        "shape": list(index.matrix.shape),
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(INDEX_MAGIC)
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        fh.write(np.ascontiguousarray(index.matrix, dtype="<f8").tobytes())


def load_index(path) -> TrajectoryIndex:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != INDEX_MAGIC:
        raise CheckpointError("not a trajectory index (bad magic)")
    (header_len,) = struct.unpack("<I", blob[4:8])
    header = json.loads(blob[8 : 8 + header_len].decode("utf-8"))
    if header.get("version") != INDEX_VERSION:
        raise CheckpointError(f"unsupported index version {header.get('version')!r}")
    shape = tuple(header["shape"])
    matrix = (
        np.frombuffer(blob[8 + header_len :], dtype="<f8").reshape(shape).copy()
    )
    return TrajectoryIndex(
        ids=tuple(header["ids"]), matrix=matrix, fingerprint=header["fingerprint"]
    )
