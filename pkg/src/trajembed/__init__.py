"""Joint point-cloud/language/trajectory embedding for manipulation transfer.

Learns a shared 25-dim space in which a part/instruction pair and the
trajectories that would manipulate it land close together, trains it with a
loss-augmented margin over mined counter-examples, and retrieves trajectories
for new tasks with a single projection against a pre-embedded library.
"""

from .dtw import DtwWeights, dtw_matrix, dtw_mt
from .embedding import EmbeddingNet, NetworkSizes
from .errors import TrajembedError
from .evaluation import FoldSplit, MetricsReport, evaluate, export_embeddings, make_folds
from .features import build_training_data
from .grids import (
    CompactGridConfig,
    CompactGridPair,
    GridSpec,
    OccupancyGrid,
    PartGridEncoder,
    compact_grids,
    voxelize,
)
from .records import (
    Dataset,
    Instruction,
    Manual,
    PartFrame,
    Point,
    PointCloud,
    SegmentedPart,
    TaskExample,
    Trajectory,
    Waypoint,
    load_dataset,
    save_dataset,
)
from .retrieval import (
    TrajectoryIndex,
    TrajectoryLibrary,
    bench,
    build_index,
    infer,
    infer_exhaustive,
    load_index,
    save_index,
)
from .segmentation import (
    RankWeights,
    SceneContext,
    SegmentationParams,
    build_ranking_pool,
    build_scene_context,
    generate_candidates,
    score_segment,
    select_parts,
)
from .synthetic import SyntheticConfig, gen_synthetic, gen_synthetic_with_truth
from .text import BagOfWordsEncoder, Vocabulary, bag_of_words
from .trajectories import NormalizedTrajectory, TrajectoryNormalizer, normalize_trajectory
from .training import (
    JointEmbedding,
    RelevanceSets,
    TrainConfig,
    build_relevance_sets,
    most_violating,
)

__version__ = "0.1.0"

__all__ = [
    "BagOfWordsEncoder",
    "CompactGridConfig",
    "CompactGridPair",
    "Dataset",
    "DtwWeights",
    "EmbeddingNet",
    "FoldSplit",
    "GridSpec",
    "Instruction",
    "JointEmbedding",
    "Manual",
    "MetricsReport",
    "NetworkSizes",
    "NormalizedTrajectory",
    "OccupancyGrid",
    "PartFrame",
    "PartGridEncoder",
    "Point",
    "PointCloud",
    "RankWeights",
    "RelevanceSets",
    "SceneContext",
    "SegmentationParams",
    "SegmentedPart",
    "SyntheticConfig",
    "TaskExample",
    "TrainConfig",
    "Trajectory",
    "TrajectoryIndex",
    "TrajectoryLibrary",
    "TrajectoryNormalizer",
    "TrajembedError",
    "Vocabulary",
    "Waypoint",
    "bag_of_words",
    "bench",
    "build_index",
    "build_ranking_pool",
    "build_relevance_sets",
    "build_scene_context",
    "build_training_data",
    "compact_grids",
    "dtw_matrix",
    "dtw_mt",
    "evaluate",
    "export_embeddings",
    "gen_synthetic",
    "gen_synthetic_with_truth",
    "generate_candidates",
    "infer",
    "infer_exhaustive",
    "load_dataset",
    "load_index",
    "make_folds",
    "most_violating",
    "normalize_trajectory",
    "save_dataset",
    "save_index",
    "score_segment",
    "select_parts",
    "voxelize",
]
