"""The three-branch embedding network and its checkpoint format.

Point-cloud and language branches each project to a shared 125-dim pair
space; their elementwise sum passes through a final layer into the joint
25-dim embedding. The trajectory branch projects its 150-dim input through
two hidden layers into the same 25-dim space. Similarity between a task
(part + instruction) and a trajectory is the plain dot product of their
embeddings, so the final layers use identity activations.

Checkpoints are single files: a JSON header (format version, layer specs,
vocabulary, featurization settings) followed by raw little-endian float64
parameter blocks. Round-trips are bit-exact and the fingerprint of a model
is the SHA-256 of exactly these bytes.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, fields

import numpy as np

from .errors import CheckpointError, DimensionMismatchError
from .grids import CompactGridConfig
from .network import DenseStack, LayerSpec, ParamBlock
from .text import Vocabulary
from .trajectories import TRAJECTORY_DIM

CHECKPOINT_MAGIC = b"TJEM"
CHECKPOINT_VERSION = 1

_STACK_ORDER = ("pc", "lang", "joint", "traj")


@dataclass(frozen=True)
class NetworkSizes:
    """Layer widths of the embedding network."""

    pc_hidden: int = 250
    lang_hidden: int = 150
    traj_hidden: int = 100
    pair_dim: int = 125
    traj_pair_dim: int = 100
    embed_dim: int = 25


@dataclass
class EmbeddingNet:
    """Parameter stacks for the two mapping functions plus featurizer settings."""

    pc_stack: DenseStack
    lang_stack: DenseStack
    joint_stack: DenseStack
    traj_stack: DenseStack
    vocabulary: Vocabulary
    grid_config: CompactGridConfig
    resample_mode: str = "index"

    @staticmethod
    def build(
        vocabulary: Vocabulary,
        rng: np.random.Generator,
        sizes: NetworkSizes | None = None,
        grid_config: CompactGridConfig | None = None,
        resample_mode: str = "index",
    ) -> "EmbeddingNet":
        sizes = sizes or NetworkSizes()
        grid_config = grid_config or CompactGridConfig()
        relu, identity = "rectified_linear", "identity"
        pc = [
            LayerSpec(grid_config.flat_dim, sizes.pc_hidden, relu),
            LayerSpec(sizes.pc_hidden, sizes.pair_dim, relu),
        ]
        lang = [
            LayerSpec(len(vocabulary), sizes.lang_hidden, relu),
            LayerSpec(sizes.lang_hidden, sizes.pair_dim, relu),
        ]
        joint = [LayerSpec(sizes.pair_dim, sizes.embed_dim, identity)]
        traj = [
            LayerSpec(TRAJECTORY_DIM, sizes.traj_hidden, relu),
            LayerSpec(sizes.traj_hidden, sizes.traj_pair_dim, relu),
            LayerSpec(sizes.traj_pair_dim, sizes.embed_dim, identity),
        ]
        return EmbeddingNet(
            pc_stack=DenseStack.initialize(pc, rng),
            lang_stack=DenseStack.initialize(lang, rng),
            joint_stack=DenseStack.initialize(joint, rng),
            traj_stack=DenseStack.initialize(traj, rng),
            vocabulary=vocabulary,
            grid_config=grid_config,
            resample_mode=resample_mode,
        )

    # -- embedding --------------------------------------------------------

    def _stacks(self) -> dict[str, DenseStack]:
        return {
            "pc": self.pc_stack,
            "lang": self.lang_stack,
            "joint": self.joint_stack,
            "traj": self.traj_stack,
        }

    @property
    def pair_stack(self) -> DenseStack:
        """Trajectory layers up to the pair space (shared-parameter view)."""
        return DenseStack(self.traj_stack.specs[:-1], self.traj_stack.params[:-1])

    def embed_task(self, grids, bows) -> np.ndarray:
        """Joint embedding of part grids + word bags (single or batched)."""
        grids = _as_input(grids)
        bows = _as_input(bows)
        if grids.ndim != bows.ndim or (
            grids.ndim == 2 and grids.shape[0] != bows.shape[0]
        ):
            raise DimensionMismatchError("grid and word-bag batches must align")
        pair = self.pc_stack.output(grids) + self.lang_stack.output(bows)
        return self.joint_stack.output(pair)

    def embed_traj(self, trajectories) -> np.ndarray:
        """Embedding of flattened normalized trajectories (single or batched)."""
        return self.traj_stack.output(_as_input(trajectories))

    def parameters(self) -> list[np.ndarray]:
        out = []
        for name in _STACK_ORDER:
            out.extend(self._stacks()[name].parameters())
        return out

    def parameter_count(self) -> int:
        return int(sum(p.size for p in self.parameters()))

    def copy_parameters(self) -> list[np.ndarray]:
        return [p.copy() for p in self.parameters()]

    def load_parameters(self, snapshot: list[np.ndarray]) -> None:
        for target, source in zip(self.parameters(), snapshot):
            target[...] = source

    # -- serialization ----------------------------------------------------

    def to_bytes(self) -> bytes:
        header = {
            "version": CHECKPOINT_VERSION,
            "stacks": {
                name: [
                    [s.in_dim, s.out_dim, s.activation]
                    for s in self._stacks()[name].specs
                ]
                for name in _STACK_ORDER
            },
            "vocabulary": list(self.vocabulary.terms),
            "grid_config": {
                f.name: getattr(self.grid_config, f.name)
                for f in fields(CompactGridConfig)
            },
            "resample_mode": self.resample_mode,
        }
        header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
        blob = [CHECKPOINT_MAGIC, struct.pack("<I", len(header_bytes)), header_bytes]
        for param in self.parameters():
            blob.append(np.ascontiguousarray(param, dtype="<f8").tobytes())
        return b"".join(blob)

    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_bytes()).hexdigest()

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @staticmethod
    def load(path) -> "EmbeddingNet":
        with open(path, "rb") as fh:
            blob = fh.read()
        return EmbeddingNet.from_bytes(blob)

    @staticmethod
    def from_bytes(blob: bytes) -> "EmbeddingNet":
        if blob[:4] != CHECKPOINT_MAGIC:
            raise CheckpointError("not a model checkpoint (bad magic)")
        (header_len,) = struct.unpack("<I", blob[4:8])
        try:
            header = json.loads(blob[8 : 8 + header_len].decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CheckpointError(f"corrupt checkpoint header: {exc}") from exc
        if header.get("version") != CHECKPOINT_VERSION:
            raise CheckpointError(
                f"unsupported checkpoint version {header.get('version')!r}"
            )
        offset = 8 + header_len
        stacks = {}
        for name in _STACK_ORDER:
            specs, params = [], []
            for in_dim, out_dim, activation in header["stacks"][name]:
                spec = LayerSpec(in_dim, out_dim, activation)
                weight, offset = _read_array(blob, offset, (out_dim, in_dim))
                bias, offset = _read_array(blob, offset, (out_dim,))
                specs.append(spec)
                params.append(ParamBlock(weight=weight, bias=bias))
            stacks[name] = DenseStack(specs, params)
        if offset != len(blob):
            raise CheckpointError("checkpoint has trailing bytes")
        terms = tuple(header["vocabulary"])
        vocabulary = Vocabulary(terms=terms, index={t: i for i, t in enumerate(terms)})
        return EmbeddingNet(
            pc_stack=stacks["pc"],
            lang_stack=stacks["lang"],
            joint_stack=stacks["joint"],
            traj_stack=stacks["traj"],
            vocabulary=vocabulary,
            grid_config=CompactGridConfig(**header["grid_config"]),
            resample_mode=header["resample_mode"],
        )


def _as_input(x) -> np.ndarray:
    if hasattr(x, "flattened"):
        x = x.flattened
    return np.asarray(x, dtype=np.float64)


def _read_array(blob: bytes, offset: int, shape: tuple) -> tuple[np.ndarray, int]:
    count = int(np.prod(shape))
    end = offset + count * 8
    if end > len(blob):
        raise CheckpointError("checkpoint truncated")
    arr = np.frombuffer(blob[offset:end], dtype="<f8").reshape(shape).copy()
    return arr, end
