"""Margin training of the joint embedding space.

Three stages. Layerwise sparse de-noising autoencoders initialize the lowest
layer of each branch (all layers, in the stacked-autoencoder ablation). The
pair spaces are then pre-trained with the same margin machinery used at the
top: for each training triple the most violating counter-example is mined
(highest similarity plus alpha-scaled trajectory loss) and a hinge pushes the
matching pair above it by a margin equal to that trajectory loss. Finally the
whole network is fine-tuned on the joint space, minibatch by minibatch, with
AdaDelta and validation-based early stopping.

Mining is treated as fixed during differentiation (the standard structured
hinge subgradient) and is re-run every minibatch. At exact hinge ties the
zero branch is taken. Every loop is seeded and iterates in a fixed order, so
identical seeds produce bit-identical parameters.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, fields, replace

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .dtw import DtwWeights, dtw_matrix
from .embedding import EmbeddingNet, NetworkSizes
from .errors import EmptyCandidatesError, EmptySimilarSetError
from .features import TrainingData, build_training_data, task_feature_matrix
from .grids import CompactGridConfig
from .network import DenseStack, LayerSpec, init_param_block
from .optim import AdaDelta
from .records import Dataset, TaskExample
from .text import Vocabulary

log = logging.getLogger(__name__)

MARGIN_MODES = ("loss_augmented", "constant_1")
PRETRAINING_MODES = ("metric", "sda", "none")


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of the three-stage pipeline."""

    alpha: float = 0.2
    t_similar: float = 10.0
    t_dissimilar: float = 20.0
    sda_epochs: int = 50
    metric_epochs: int = 100
    finetune_epochs: int = 300
    batch_size: int = 64
    sda_noise_rate: float = 0.3
    sda_sparsity: float = 1e-3
    margin_mode: str = "loss_augmented"
    pretraining: str = "metric"
    use_candidate_views: bool = True
    rho: float = 0.95
    eps: float = 1e-6
    patience: int = 30
    validation_fraction: float = 0.1
    accuracy_threshold: float = 10.0
    max_similar_per_task: int = 0  # 0 trains on every similar trajectory
    seed: int = 0
    resample_mode: str = "index"

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if self.t_similar > self.t_dissimilar:
            raise ValueError("t_similar must not exceed t_dissimilar")
        if self.margin_mode not in MARGIN_MODES:
            raise ValueError(f"margin_mode must be one of {MARGIN_MODES}")
        if self.pretraining not in PRETRAINING_MODES:
            raise ValueError(f"pretraining must be one of {PRETRAINING_MODES}")


@dataclass(frozen=True)
class RelevanceSets:
    """Similar/dissimilar trajectory ids for one task, plus cached losses."""

    task_id: str
    similar: tuple[str, ...]
    dissimilar: tuple[str, ...]
    delta_to_optimal: dict[str, float]


def build_relevance_sets(
    task: TaskExample,
    pool_ids,
    delta_row: np.ndarray,
    t_similar: float,
    t_dissimilar: float,
) -> RelevanceSets:
    """Split the pool by loss to the task's optimal demo.

    Strict comparisons: similar means loss < t_similar, dissimilar means
    loss > t_dissimilar; trajectories in between belong to neither set. An
    empty dissimilar set only gets a warning (training skips such tasks).
    """
    pool_ids = list(pool_ids)
    similar = tuple(t for t, d in zip(pool_ids, delta_row) if d < t_similar)
    dissimilar = tuple(t for t, d in zip(pool_ids, delta_row) if d > t_dissimilar)
    if not similar:
        raise EmptySimilarSetError(
            f"task {task.task_id!r}: optimal demo missing from its own similar set"
        )
    if not dissimilar:
        log.warning(
            "task %s has no dissimilar trajectories in the pool; it will be skipped",
            task.task_id,
        )
    return RelevanceSets(
        task_id=task.task_id,
        similar=similar,
        dissimilar=dissimilar,
        delta_to_optimal=dict(zip(pool_ids, (float(d) for d in delta_row))),
    )


def most_violating(
    task_embedding: np.ndarray,
    candidate_ids,
    candidate_embeddings: np.ndarray,
    delta_row: np.ndarray,
    alpha: float,
) -> str:
    """The candidate maximizing similarity plus alpha-scaled loss.

    Ties are broken toward the smallest trajectory id.
    """
    candidate_ids = list(candidate_ids)
    if not candidate_ids:
        raise EmptyCandidatesError("mining over an empty candidate set")
    scores = candidate_embeddings @ np.asarray(task_embedding) + alpha * np.asarray(
        delta_row
    )
    best = scores.max()
    return min(cid for cid, s in zip(candidate_ids, scores) if s == best)


# -- loss kernels ----------------------------------------------------------


def _row_dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.einsum("bi,bi->b", a, b)


def h3_loss_and_grads(
    net: EmbeddingNet,
    grids: np.ndarray,
    bows: np.ndarray,
    pos_feats: np.ndarray,
    neg_feats: np.ndarray,
    margins: np.ndarray,
):
    """Mean joint-space hinge loss over a batch plus exact gradients.

    The negatives are the already-mined most-violating trajectories; the
    gradient treats them as fixed. Returns (mean loss, gradients in
    net.parameters() order, per-example losses).
    """
    pc_acts = net.pc_stack.forward(grids)
    lang_acts = net.lang_stack.forward(bows)
    joint_acts = net.joint_stack.forward(pc_acts[-1] + lang_acts[-1])
    task_emb = joint_acts[-1]
    pos_acts = net.traj_stack.forward(pos_feats)
    neg_acts = net.traj_stack.forward(neg_feats)
    pos_emb, neg_emb = pos_acts[-1], neg_acts[-1]

    raw = margins + _row_dot(task_emb, neg_emb) - _row_dot(task_emb, pos_emb)
    losses = np.maximum(raw, 0.0)
    scale = (raw > 0.0).astype(np.float64) / len(raw)

    joint_grads, d_pair = net.joint_stack.backward(
        joint_acts, (neg_emb - pos_emb) * scale[:, None]
    )
    pc_grads, _ = net.pc_stack.backward(pc_acts, d_pair)
    lang_grads, _ = net.lang_stack.backward(lang_acts, d_pair)
    traj_pos, _ = net.traj_stack.backward(pos_acts, -task_emb * scale[:, None])
    traj_neg, _ = net.traj_stack.backward(neg_acts, task_emb * scale[:, None])
    traj_grads = [a + b for a, b in zip(traj_pos, traj_neg)]
    grads = pc_grads + lang_grads + joint_grads + traj_grads
    return float(losses.mean()), grads, losses


def h2pl_loss_and_grads(
    net: EmbeddingNet,
    grids: np.ndarray,
    pos_bows: np.ndarray,
    neg_bows: np.ndarray,
    margins: np.ndarray,
):
    """Pair-space hinge for point-cloud/language pre-training.

    Anchors are point-cloud branch outputs; positives/negatives are language
    branch outputs. Gradients cover pc then lang stack parameters.
    """
    pc_acts = net.pc_stack.forward(grids)
    pos_acts = net.lang_stack.forward(pos_bows)
    neg_acts = net.lang_stack.forward(neg_bows)
    anchor, pos, neg = pc_acts[-1], pos_acts[-1], neg_acts[-1]

    raw = margins + _row_dot(anchor, neg) - _row_dot(anchor, pos)
    losses = np.maximum(raw, 0.0)
    scale = (raw > 0.0).astype(np.float64) / len(raw)

    pc_grads, _ = net.pc_stack.backward(pc_acts, (neg - pos) * scale[:, None])
    lang_pos, _ = net.lang_stack.backward(pos_acts, -anchor * scale[:, None])
    lang_neg, _ = net.lang_stack.backward(neg_acts, anchor * scale[:, None])
    lang_grads = [a + b for a, b in zip(lang_pos, lang_neg)]
    return float(losses.mean()), pc_grads + lang_grads, losses


def h2tau_loss_and_grads(
    net: EmbeddingNet,
    anchor_feats: np.ndarray,
    neg_feats: np.ndarray,
    margins: np.ndarray,
):
    """Pair-space hinge for trajectory pre-training.

    The pair layer is conceptually duplicated for the anchor and the mined
    negative, but both copies are one shared parameter set, so the two
    backward passes sum into the same gradients. The anchor's similarity to
    itself plays the positive role. Gradients cover pair-stack parameters.
    """
    stack = net.pair_stack
    anchor_acts = stack.forward(anchor_feats)
    neg_acts = stack.forward(neg_feats)
    u, v = anchor_acts[-1], neg_acts[-1]

    raw = margins + _row_dot(u, v) - _row_dot(u, u)
    losses = np.maximum(raw, 0.0)
    scale = (raw > 0.0).astype(np.float64) / len(raw)

    grads_anchor, _ = stack.backward(anchor_acts, (v - 2.0 * u) * scale[:, None])
    grads_neg, _ = stack.backward(neg_acts, u * scale[:, None])
    grads = [a + b for a, b in zip(grads_anchor, grads_neg)]
    return float(losses.mean()), grads, losses


def _mine_batch(
    scores: np.ndarray, allowed: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise argmax over allowed columns (columns are id-sorted, so the
    first maximum is the smallest id). Returns (choice, row has candidates)."""
    masked = np.where(allowed, scores, -np.inf)
    return masked.argmax(axis=1), allowed.any(axis=1)


# -- training log ----------------------------------------------------------

LOG_COLUMNS = ("stage", "epoch", "mean_loss", "violation_rate", "validation_accuracy")


class TrainingLog:
    """Collects per-epoch rows; optionally streams them to a callback."""

    def __init__(self, sink=None):
        self.rows: list[dict] = []
        self._sink = sink

    def append(self, stage, epoch, mean_loss, violation_rate, validation_accuracy=None):
        row = {
            "stage": stage,
            "epoch": epoch,
            "mean_loss": mean_loss,
            "violation_rate": violation_rate,
            "validation_accuracy": validation_accuracy,
        }
        self.rows.append(row)
        if self._sink is not None:
            self._sink(row)

    def stage_losses(self, stage: str) -> list[float]:
        return [r["mean_loss"] for r in self.rows if r["stage"] == stage]

    def to_tsv(self) -> str:
        lines = ["\t".join(LOG_COLUMNS)]
        for row in self.rows:
            values = []
            for col in LOG_COLUMNS:
                v = row[col]
                values.append("" if v is None else (f"{v:.6f}" if isinstance(v, float) else str(v)))
            lines.append("\t".join(values))
        return "\n".join(lines) + "\n"


# -- stage: sparse de-noising autoencoders ----------------------------------


def dae_loss_and_grads(
    weight: np.ndarray,
    bias: np.ndarray,
    dec_weight: np.ndarray,
    dec_bias: np.ndarray,
    activation: str,
    corrupted: np.ndarray,
    clean: np.ndarray,
    sparsity: float,
):
    """Batch-mean reconstruction loss of one de-noising autoencoder layer.

    loss = mean over batch of (0.5 ||decode(encode(corrupted)) - clean||^2
    + sparsity * ||encoding||_1). Returns (loss, grads for [weight, bias,
    dec_weight, dec_bias]).
    """
    batch = corrupted.shape[0]
    z = corrupted @ weight.T + bias
    hidden = np.maximum(z, 0.0) if activation == "rectified_linear" else z
    recon = hidden @ dec_weight.T + dec_bias
    err = recon - clean
    loss = 0.5 * float((err**2).sum()) / batch + sparsity * float(
        np.abs(hidden).sum()
    ) / batch

    d_recon = err / batch
    g_dec_weight = d_recon.T @ hidden
    g_dec_bias = d_recon.sum(axis=0)
    d_hidden = d_recon @ dec_weight + (sparsity / batch) * np.sign(hidden)
    if activation == "rectified_linear":
        d_hidden = d_hidden * (hidden > 0.0)
    g_weight = d_hidden.T @ corrupted
    g_bias = d_hidden.sum(axis=0)
    return loss, [g_weight, g_bias, g_dec_weight, g_dec_bias]


def _train_dae_layer(
    stack: DenseStack,
    layer: int,
    data: np.ndarray,
    config: TrainConfig,
    rng: np.random.Generator,
    tlog: TrainingLog,
    stage: str,
) -> None:
    """Greedy step: train one layer to reconstruct its (clean) input."""
    encoded = stack.forward(data)[layer] if layer > 0 else data
    spec = stack.specs[layer]
    block = stack.params[layer]
    decoder = init_param_block(
        LayerSpec(spec.out_dim, spec.in_dim, "identity"), rng
    )
    params = [block.weight, block.bias, decoder.weight, decoder.bias]
    optimizer = AdaDelta(params, rho=config.rho, eps=config.eps)
    n = encoded.shape[0]
    for epoch in range(config.sda_epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            batch = encoded[order[start : start + config.batch_size]]
            keep = rng.random(batch.shape) >= config.sda_noise_rate
            loss, grads = dae_loss_and_grads(
                *params, spec.activation, batch * keep, batch, config.sda_sparsity
            )
            optimizer.step(grads)
            epoch_loss += loss * batch.shape[0]
        tlog.append(stage, epoch, epoch_loss / n, violation_rate=0.0)


def pretrain_sda(
    net: EmbeddingNet,
    data: TrainingData,
    config: TrainConfig,
    rng: np.random.Generator,
    tlog: TrainingLog | None = None,
) -> None:
    """Layerwise de-noising autoencoder initialization of the lower layers.

    In "metric" mode only the first layer of each branch is covered (the pair
    layers are pre-trained by the margin stages); in "sda" mode every layer
    below the final embedding layers is covered, greedily.
    """
    tlog = tlog or TrainingLog()
    deep = config.pretraining == "sda"
    plans = [
        (net.pc_stack, data.sda_grids, "pc", 2 if deep else 1),
        (net.lang_stack, data.lang_bows, "lang", 2 if deep else 1),
        (net.traj_stack, data.pool_features, "traj", 2 if deep else 1),
    ]
    for stack, stack_data, name, depth in plans:
        for layer in range(depth):
            _train_dae_layer(
                stack, layer, stack_data, config, rng, tlog, f"sda/{name}{layer}"
            )


# -- stage: metric pre-training of the pair spaces ---------------------------


@dataclass
class _Triples:
    """Flattened (view, positive) training triples."""

    grids: np.ndarray  # (T, grid dim)
    bows: np.ndarray  # (T, |V|)
    pos_index: np.ndarray  # (T,) pool index of the positive trajectory
    task_row: np.ndarray  # (T,) row into the task-level arrays


def _build_triples(
    data: TrainingData, relevance: list[RelevanceSets], max_similar: int = 0
) -> tuple[_Triples, np.ndarray]:
    """Expand tasks into triples and build the (task, pool) dissimilar mask.

    Tasks with an empty dissimilar set contribute no triples. A positive
    ``max_similar`` keeps only that many positives per task (the ones closest
    to the optimal demo), which bounds the epoch cost on dense pools.
    """
    pool_index = {t: i for i, t in enumerate(data.pool_ids)}
    dissimilar_mask = np.zeros((len(data.task_ids), data.pool_size), dtype=bool)
    grids, bows, pos_index, task_row = [], [], [], []
    for row, (rel, views) in enumerate(zip(relevance, data.task_grids)):
        for tid in rel.dissimilar:
            dissimilar_mask[row, pool_index[tid]] = True
        if not rel.dissimilar:
            continue
        similar = rel.similar
        if max_similar and len(similar) > max_similar:
            similar = tuple(
                sorted(similar, key=lambda t: (rel.delta_to_optimal[t], t))[:max_similar]
            )
        for sim_id in similar:
            for view in views:
                grids.append(view)
                bows.append(data.task_bows[row])
                pos_index.append(pool_index[sim_id])
                task_row.append(row)
    triples = _Triples(
        grids=np.stack(grids),
        bows=np.stack(bows),
        pos_index=np.array(pos_index, dtype=np.int64),
        task_row=np.array(task_row, dtype=np.int64),
    )
    return triples, dissimilar_mask


def _margins(data: TrainingData, pos_index, mined_index, config: TrainConfig):
    if config.margin_mode == "constant_1":
        return np.ones(len(pos_index))
    return data.delta[pos_index, mined_index]


def pretrain_h2pl(
    net: EmbeddingNet,
    data: TrainingData,
    triples: _Triples,
    config: TrainConfig,
    rng: np.random.Generator,
    tlog: TrainingLog,
) -> None:
    """Margin pre-training of the point-cloud/language pair space.

    For each triple the most violating instruction is mined from the training
    instructions whose optimal trajectory is at least t_similar away from the
    triple's positive (closer ones are not violations); the margin is the
    trajectory loss tied to the mined instruction.
    """
    # (T, L): which instructions are admissible negatives per triple.
    admissible = (
        data.delta[triples.pos_index][:, data.lang_optimal_index] >= config.t_similar
    )
    usable = admissible.any(axis=1)
    if not usable.all():
        log.warning(
            "%d triples have an empty language mining pool and are skipped",
            int((~usable).sum()),
        )
    params = net.pc_stack.parameters() + net.lang_stack.parameters()
    optimizer = AdaDelta(params, rho=config.rho, eps=config.eps)
    indices = np.flatnonzero(usable)
    for epoch in range(config.metric_epochs):
        order = indices[rng.permutation(len(indices))]
        epoch_loss, violations, seen = 0.0, 0, 0
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            lang_out = net.lang_stack.output(data.lang_bows)
            anchors = net.pc_stack.output(triples.grids[batch])
            scores = anchors @ lang_out.T + config.alpha * data.delta[
                triples.pos_index[batch]
            ][:, data.lang_optimal_index]
            mined, _ = _mine_batch(scores, admissible[batch])
            margins = _margins(
                data, triples.pos_index[batch], data.lang_optimal_index[mined], config
            )
            loss, grads, losses = h2pl_loss_and_grads(
                net,
                triples.grids[batch],
                triples.bows[batch],
                data.lang_bows[mined],
                margins,
            )
            optimizer.step(grads)
            epoch_loss += loss * len(batch)
            violations += int((losses > 0).sum())
            seen += len(batch)
        tlog.append("h2pl", epoch, epoch_loss / max(seen, 1), violations / max(seen, 1))


def pretrain_h2tau(
    net: EmbeddingNet,
    data: TrainingData,
    triples: _Triples,
    dissimilar_mask: np.ndarray,
    config: TrainConfig,
    rng: np.random.Generator,
    tlog: TrainingLog,
) -> None:
    """Margin pre-training of the trajectory pair space (shared weights)."""
    params = net.pair_stack.parameters()
    optimizer = AdaDelta(params, rho=config.rho, eps=config.eps)
    # One anchor per (task, positive) pair; grids/bows are irrelevant here,
    # so collapse duplicate views.
    anchor_keys = sorted({(t, p) for t, p in zip(triples.task_row, triples.pos_index)})
    task_row = np.array([t for t, _ in anchor_keys], dtype=np.int64)
    pos_index = np.array([p for _, p in anchor_keys], dtype=np.int64)
    for epoch in range(config.metric_epochs):
        order = rng.permutation(len(pos_index))
        epoch_loss, violations, seen = 0.0, 0, 0
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            pair_out = net.pair_stack.output(data.pool_features)
            anchors = pair_out[pos_index[batch]]
            scores = anchors @ pair_out.T + config.alpha * data.delta[pos_index[batch]]
            mined, _ = _mine_batch(scores, dissimilar_mask[task_row[batch]])
            margins = _margins(data, pos_index[batch], mined, config)
            loss, grads, losses = h2tau_loss_and_grads(
                net,
                data.pool_features[pos_index[batch]],
                data.pool_features[mined],
                margins,
            )
            optimizer.step(grads)
            epoch_loss += loss * len(batch)
            violations += int((losses > 0).sum())
            seen += len(batch)
        tlog.append("h2tau", epoch, epoch_loss / max(seen, 1), violations / max(seen, 1))


# -- stage: joint-space fine-tuning ------------------------------------------


@dataclass
class ValidationData:
    """Held-out tasks scored against the training pool during fine-tuning."""

    grids: np.ndarray  # (V, grid dim)
    bows: np.ndarray  # (V, |V|)
    expert_delta: np.ndarray  # (V, P) loss between each task's expert demo and pool


def validation_accuracy(
    net: EmbeddingNet, val: ValidationData, pool_features: np.ndarray, threshold: float
) -> float:
    """Fraction of held-out tasks whose retrieved trajectory is within threshold."""
    if val.grids.shape[0] == 0:
        return float("nan")
    task_emb = net.embed_task(val.grids, val.bows)
    pool_emb = net.embed_traj(pool_features)
    chosen = (task_emb @ pool_emb.T).argmax(axis=1)
    losses = val.expert_delta[np.arange(len(chosen)), chosen]
    return float((losses < threshold).mean())


def finetune_h3(
    net: EmbeddingNet,
    data: TrainingData,
    triples: _Triples,
    dissimilar_mask: np.ndarray,
    config: TrainConfig,
    rng: np.random.Generator,
    tlog: TrainingLog,
    validation: ValidationData | None = None,
) -> None:
    """Fine-tune every parameter on the joint-space hinge.

    Each minibatch re-mines its most violating trajectories, averages the
    hinge cost, and applies one AdaDelta update. When validation data is
    given, the best accuracy-at-threshold checkpoint is kept and training
    stops after config.patience epochs without improvement.
    """
    params = net.parameters()
    optimizer = AdaDelta(params, rho=config.rho, eps=config.eps)
    best_acc, best_params, since_best = -np.inf, None, 0
    for epoch in range(config.finetune_epochs):
        order = rng.permutation(len(triples.pos_index))
        epoch_loss, violations, seen = 0.0, 0, 0
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            pool_emb = net.embed_traj(data.pool_features)
            task_emb = net.embed_task(triples.grids[batch], triples.bows[batch])
            scores = task_emb @ pool_emb.T + config.alpha * data.delta[
                triples.pos_index[batch]
            ]
            mined, _ = _mine_batch(scores, dissimilar_mask[triples.task_row[batch]])
            margins = _margins(data, triples.pos_index[batch], mined, config)
            loss, grads, losses = h3_loss_and_grads(
                net,
                triples.grids[batch],
                triples.bows[batch],
                data.pool_features[triples.pos_index[batch]],
                data.pool_features[mined],
                margins,
            )
            optimizer.step(grads)
            epoch_loss += loss * len(batch)
            violations += int((losses > 0).sum())
            seen += len(batch)
        val_acc = None
        if validation is not None:
            val_acc = validation_accuracy(
                net, validation, data.pool_features, config.accuracy_threshold
            )
            if val_acc > best_acc:
                best_acc, best_params, since_best = val_acc, net.copy_parameters(), 0
            else:
                since_best += 1
        tlog.append("h3", epoch, epoch_loss / max(seen, 1), violations / max(seen, 1), val_acc)
        if validation is not None and since_best > config.patience:
            break
    if best_params is not None:
        net.load_parameters(best_params)


# -- the estimator -----------------------------------------------------------


class JointEmbedding(BaseEstimator):
    """Sklearn-style estimator for the full three-stage training pipeline.

    fit() learns the embedding network from a dataset; predict() retrieves,
    for each requested task, the training-pool trajectory whose embedding has
    the highest dot product with the task embedding. Constructor arguments
    mirror TrainConfig plus the featurization settings.
    """

    def __init__(
        self,
        alpha: float = 0.2,
        t_similar: float = 10.0,
        t_dissimilar: float = 20.0,
        sda_epochs: int = 50,
        metric_epochs: int = 100,
        finetune_epochs: int = 300,
        batch_size: int = 64,
        sda_noise_rate: float = 0.3,
        sda_sparsity: float = 1e-3,
        margin_mode: str = "loss_augmented",
        pretraining: str = "metric",
        use_candidate_views: bool = True,
        rho: float = 0.95,
        eps: float = 1e-6,
        patience: int = 30,
        validation_fraction: float = 0.1,
        accuracy_threshold: float = 10.0,
        max_similar_per_task: int = 0,
        seed: int = 0,
        resample_mode: str = "index",
        sizes: NetworkSizes | None = None,
        grid_config: CompactGridConfig | None = None,
        dtw_weights: DtwWeights | None = None,
        log_sink=None,
    ):
        self.alpha = alpha
        self.t_similar = t_similar
        self.t_dissimilar = t_dissimilar
        self.sda_epochs = sda_epochs
        self.metric_epochs = metric_epochs
        self.finetune_epochs = finetune_epochs
        self.batch_size = batch_size
        self.sda_noise_rate = sda_noise_rate
        self.sda_sparsity = sda_sparsity
        self.margin_mode = margin_mode
        self.pretraining = pretraining
        self.use_candidate_views = use_candidate_views
        self.rho = rho
        self.eps = eps
        self.patience = patience
        self.validation_fraction = validation_fraction
        self.accuracy_threshold = accuracy_threshold
        self.max_similar_per_task = max_similar_per_task
        self.seed = seed
        self.resample_mode = resample_mode
        self.sizes = sizes
        self.grid_config = grid_config
        self.dtw_weights = dtw_weights
        self.log_sink = log_sink

    def _config(self) -> TrainConfig:
        kwargs = {
            f.name: getattr(self, f.name)
            for f in fields(TrainConfig)
            if hasattr(self, f.name)
        }
        return TrainConfig(**kwargs)

    def fit(self, dataset: Dataset, task_ids=None, validation_task_ids=None):
        """Train on the given tasks (default: all tasks in the dataset).

        When validation_task_ids is None, a validation_fraction share of the
        training tasks is carved out (seeded) for early stopping.
        """
        config = self._config()
        rng = np.random.default_rng(config.seed)
        task_ids = sorted(task_ids if task_ids is not None else dataset.tasks)
        if validation_task_ids is None:
            shuffled = list(task_ids)
            rng.shuffle(shuffled)
            n_val = int(round(config.validation_fraction * len(shuffled)))
            validation_task_ids = sorted(shuffled[:n_val])
            task_ids = sorted(shuffled[n_val:])
        else:
            validation_task_ids = sorted(validation_task_ids)

        vocabulary = Vocabulary.build(
            dataset.instructions[dataset.tasks[t].instruction_id].text
            for t in task_ids
        )
        grid_config = self.grid_config or CompactGridConfig()
        dtw_weights = self.dtw_weights or DtwWeights()
        data = build_training_data(
            dataset,
            task_ids,
            vocabulary,
            grid_config=grid_config,
            dtw_weights=dtw_weights,
            resample_mode=config.resample_mode,
            use_candidate_views=config.use_candidate_views,
        )
        relevance = [
            build_relevance_sets(
                dataset.tasks[tid],
                data.pool_ids,
                data.delta[data.optimal_index[i]],
                config.t_similar,
                config.t_dissimilar,
            )
            for i, tid in enumerate(data.task_ids)
        ]
        triples, dissimilar_mask = _build_triples(
            data, relevance, config.max_similar_per_task
        )

        validation = None
        if validation_task_ids:
            val_grids, val_bows = task_feature_matrix(
                dataset, validation_task_ids, vocabulary, grid_config
            )
            val_experts = [
                dataset.trajectories[dataset.tasks[t].optimal_demo_id]
                for t in validation_task_ids
            ]
            pool_trajs = [dataset.trajectories[t] for t in data.pool_ids]
            validation = ValidationData(
                grids=val_grids,
                bows=val_bows,
                expert_delta=dtw_matrix(val_experts, pool_trajs, weights=dtw_weights),
            )

        net = EmbeddingNet.build(
            vocabulary,
            rng,
            sizes=self.sizes,
            grid_config=grid_config,
            resample_mode=config.resample_mode,
        )
        tlog = TrainingLog(sink=self.log_sink)
        if config.pretraining in ("metric", "sda"):
            pretrain_sda(net, data, config, rng, tlog)
        if config.pretraining == "metric":
            pretrain_h2pl(net, data, triples, config, rng, tlog)
            pretrain_h2tau(net, data, triples, dissimilar_mask, config, rng, tlog)
        finetune_h3(net, data, triples, dissimilar_mask, config, rng, tlog, validation)

        self.net_ = net
        self.history_ = tlog.rows
        self.log_ = tlog
        self.training_data_ = data
        self.relevance_ = relevance
        self.train_task_ids_ = task_ids
        self.validation_task_ids_ = validation_task_ids
        return self

    def _check_fitted(self):
        if not hasattr(self, "net_"):
            raise NotFittedError("JointEmbedding must be fitted first")

    def transform(self, dataset: Dataset, task_ids) -> np.ndarray:
        """Joint-space embeddings of the given tasks."""
        self._check_fitted()
        grids, bows = task_feature_matrix(
            dataset, list(task_ids), self.net_.vocabulary, self.net_.grid_config
        )
        return self.net_.embed_task(grids, bows)

    def predict(self, dataset: Dataset, task_ids) -> list[str]:
        """Highest-similarity training-pool trajectory id per task."""
        self._check_fitted()
        task_emb = self.transform(dataset, task_ids)
        pool_emb = self.net_.embed_traj(self.training_data_.pool_features)
        chosen = (task_emb @ pool_emb.T).argmax(axis=1)
        return [self.training_data_.pool_ids[i] for i in chosen]


def stage_config_for_baseline(tag: str, config: TrainConfig) -> TrainConfig:
    """Translate an evaluation baseline tag into config adjustments."""
    if tag in ("full", "chance"):
        return config
    if tag == "no_pretrain":
        return replace(config, pretraining="none")
    if tag == "sda_only":
        return replace(config, pretraining="sda")
    if tag == "lmnn_constant":
        return replace(config, margin_mode="constant_1", alpha=0.0)
    if tag == "no_mult_seg":
        return replace(config, use_candidate_views=False)
    raise ValueError(f"unknown baseline tag {tag!r}")
