"""Cross-validation protocol, metrics, baselines, and embedding export.

Evaluation follows the transfer protocol: for each test task the model picks
one trajectory out of the training-fold pool, and the pick is scored by its
trajectory loss against the held-out expert demonstration. Reported metrics
are the per-instruction mean loss, the per-manual mean (instructions averaged
within a manual first), and accuracy as the fraction of picks within a loss
threshold of 10, plus the full accuracy-threshold curve.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, fields

import numpy as np

from .dtw import DtwWeights, dtw_mt
from .errors import TooFewTasksError, TrajembedError
from .records import Dataset
from .training import JointEmbedding, TrainConfig, stage_config_for_baseline

log = logging.getLogger(__name__)

BASELINE_TAGS = ("chance", "lmnn_constant", "no_pretrain", "sda_only", "full", "no_mult_seg")
DEFAULT_THRESHOLDS = tuple(range(1, 31))


@dataclass(frozen=True)
class FoldSplit:
    """Task-level cross-validation folds with per-fold validation subsets."""

    folds: tuple[tuple[str, ...], ...]
    validation: tuple[tuple[str, ...], ...]
    seed: int

    def test_ids(self, fold: int) -> list[str]:
        return list(self.folds[fold])

    def validation_ids(self, fold: int) -> list[str]:
        return list(self.validation[fold])

    def train_ids(self, fold: int) -> list[str]:
        held_out = set(self.folds[fold]) | set(self.validation[fold])
        all_tasks = {t for f in self.folds for t in f}
        return sorted(all_tasks - held_out)


def make_folds(
    dataset: Dataset,
    seed: int = 0,
    n_folds: int = 5,
    validation_fraction: float = 0.1,
) -> FoldSplit:
    """Deterministic task-level folds of near-equal size (within one task).

    Each fold's validation subset is carved from its training portion; the
    split never touches test tasks, so fold-local vocabularies and pools stay
    leak-free by construction.
    """
    task_ids = sorted(dataset.tasks)
    if len(task_ids) < n_folds:
        raise TooFewTasksError(
            f"need at least {n_folds} tasks for {n_folds}-fold splitting, "
            f"got {len(task_ids)}"
        )
    rng = np.random.default_rng(seed)
    shuffled = list(task_ids)
    rng.shuffle(shuffled)
    folds = tuple(tuple(chunk) for chunk in np.array_split(shuffled, n_folds))
    validation = []
    for fold in folds:
        train_portion = [t for t in shuffled if t not in set(fold)]
        n_val = int(round(validation_fraction * len(train_portion)))
        if len(train_portion) > 1:
            n_val = max(n_val, 1)
        validation.append(tuple(sorted(train_portion[:n_val])))
    return FoldSplit(folds=folds, validation=tuple(validation), seed=seed)


@dataclass
class MetricsReport:
    """Transfer metrics of one fold."""

    dtw_per_instruction: float
    dtw_per_manual: float
    accuracy: float
    threshold: float
    curve_thresholds: tuple[float, ...]
    curve_accuracies: tuple[float, ...]
    per_task: dict[str, tuple[str | None, float]]  # task -> (chosen id, loss)
    failures: int = 0

    def row(self) -> dict:
        return {
            "dtw_per_manual": self.dtw_per_manual,
            "dtw_per_instruction": self.dtw_per_instruction,
            "accuracy": self.accuracy,
        }


def _aggregate(
    dataset: Dataset,
    task_ids: list[str],
    chosen: dict[str, str | None],
    dtw_weights: DtwWeights,
    threshold: float,
    curve_thresholds,
) -> MetricsReport:
    per_task: dict[str, tuple[str | None, float]] = {}
    losses, manuals = [], {}
    failures = 0
    for tid in task_ids:
        task = dataset.tasks[tid]
        pick = chosen.get(tid)
        if pick is None:
            failures += 1
            per_task[tid] = (None, float("inf"))
            loss = float("inf")
        else:
            expert = dataset.trajectories[task.optimal_demo_id]
            loss = dtw_mt(expert, dataset.trajectories[pick], dtw_weights)
            per_task[tid] = (pick, loss)
        losses.append(loss)
        manual_id = dataset.instructions[task.instruction_id].manual_id
        manuals.setdefault(manual_id, []).append(loss)

    finite = [v for v in losses if np.isfinite(v)]
    dtw_instruction = float(np.mean(finite)) if finite else float("inf")
    manual_means = []
    for values in manuals.values():
        finite_m = [v for v in values if np.isfinite(v)]
        if finite_m:
            manual_means.append(float(np.mean(finite_m)))
    dtw_manual = float(np.mean(manual_means)) if manual_means else float("inf")
    losses_arr = np.array(losses)
    accuracy = float((losses_arr < threshold).mean())
    curve = tuple(float((losses_arr < t).mean()) for t in curve_thresholds)
    return MetricsReport(
        dtw_per_instruction=dtw_instruction,
        dtw_per_manual=dtw_manual,
        accuracy=accuracy,
        threshold=threshold,
        curve_thresholds=tuple(float(t) for t in curve_thresholds),
        curve_accuracies=curve,
        per_task=per_task,
        failures=failures,
    )


def _estimator_from_config(config: TrainConfig, **overrides) -> JointEmbedding:
    kwargs = {f.name: getattr(config, f.name) for f in fields(TrainConfig)}
    kwargs.update(overrides)
    return JointEmbedding(**kwargs)


def evaluate(
    model,
    fold: int,
    dataset: Dataset,
    fold_split: FoldSplit,
    config: TrainConfig | None = None,
    dtw_weights: DtwWeights | None = None,
    grid_config=None,
    threshold: float = 10.0,
    curve_thresholds=DEFAULT_THRESHOLDS,
) -> MetricsReport:
    """Evaluate a model or baseline tag on one fold.

    ``model`` is either a fitted JointEmbedding, or one of the baseline tags:
    chance (random training-pool pick), lmnn_constant (constant unit margin,
    no loss augmentation), no_pretrain, sda_only, no_mult_seg, full. Tags are
    trained here on the fold's training tasks. Per-task inference errors are
    counted as failures rather than crashing the evaluation.
    """
    dtw_weights = dtw_weights or DtwWeights()
    test_ids = fold_split.test_ids(fold)
    train_ids = fold_split.train_ids(fold)
    val_ids = fold_split.validation_ids(fold)

    if isinstance(model, str):
        tag = model
        if tag not in BASELINE_TAGS:
            raise ValueError(f"unknown baseline tag {tag!r}")
        config = config or TrainConfig()
        if tag == "chance":
            rng = np.random.default_rng(config.seed + fold)
            pool = sorted({d for t in train_ids for d in dataset.tasks[t].demo_ids})
            chosen = {tid: pool[int(rng.integers(0, len(pool)))] for tid in test_ids}
            return _aggregate(
                dataset, test_ids, chosen, dtw_weights, threshold, curve_thresholds
            )
        stage_config = stage_config_for_baseline(tag, config)
        estimator = _estimator_from_config(
            stage_config, dtw_weights=dtw_weights, grid_config=grid_config
        )
        estimator.fit(dataset, task_ids=train_ids, validation_task_ids=val_ids)
    else:
        estimator = model

    chosen = {}
    for tid in test_ids:
        try:
            chosen[tid] = estimator.predict(dataset, [tid])[0]
        except TrajembedError as exc:
            log.warning("inference failed for task %s: %s", tid, exc)
            chosen[tid] = None
    return _aggregate(dataset, test_ids, chosen, dtw_weights, threshold, curve_thresholds)


def summarize_folds(reports) -> dict:
    """Mean and standard deviation of each headline metric across folds."""
    out = {}
    for key in ("dtw_per_manual", "dtw_per_instruction", "accuracy"):
        values = np.array([r.row()[key] for r in reports])
        out[f"{key}_mean"] = float(values.mean())
        out[f"{key}_std"] = float(values.std())
    return out


def report_tsv(reports, summary: dict | None = None) -> str:
    """Fold-by-fold TSV with the Table-style headline metrics."""
    lines = ["fold\tdtw_per_manual\tdtw_per_instruction\taccuracy"]
    for i, report in enumerate(reports):
        row = report.row()
        lines.append(
            f"{i}\t{row['dtw_per_manual']:.4f}\t{row['dtw_per_instruction']:.4f}"
            f"\t{row['accuracy']:.4f}"
        )
    if summary:
        lines.append(
            "mean\t{dtw_per_manual_mean:.4f}\t{dtw_per_instruction_mean:.4f}"
            "\t{accuracy_mean:.4f}".format(**summary)
        )
        lines.append(
            "std\t{dtw_per_manual_std:.4f}\t{dtw_per_instruction_std:.4f}"
            "\t{accuracy_std:.4f}".format(**summary)
        )
    return "\n".join(lines) + "\n"


def export_embeddings(net, dataset: Dataset, path, task_ids=None, trajectory_ids=None) -> None:
    """Write joint-space coordinates of tasks and trajectories as TSV.

    One row per item: id, modality tag (task or trajectory), then the 25
    embedding coordinates. Intended for external plotting tools.
    """
    from .features import task_feature_matrix
    from .trajectories import normalize_trajectory

    task_ids = sorted(task_ids if task_ids is not None else dataset.tasks)
    trajectory_ids = sorted(
        trajectory_ids if trajectory_ids is not None else dataset.trajectories
    )
    columns = ["id", "modality"] + [f"e{i}" for i in range(net.joint_stack.out_dim)]
    lines = ["\t".join(columns)]
    if task_ids:
        grids, bows = task_feature_matrix(dataset, task_ids, net.vocabulary, net.grid_config)
        embeddings = net.embed_task(grids, bows)
        for tid, emb in zip(task_ids, embeddings):
            lines.append("\t".join([tid, "task"] + [repr(float(v)) for v in emb]))
    if trajectory_ids:
        feats = np.stack(
            [
                normalize_trajectory(dataset.trajectories[t], mode=net.resample_mode).flattened
                for t in trajectory_ids
            ]
        )
        embeddings = net.embed_traj(feats)
        for tid, emb in zip(trajectory_ids, embeddings):
            lines.append("\t".join([tid, "trajectory"] + [repr(float(v)) for v in emb]))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
