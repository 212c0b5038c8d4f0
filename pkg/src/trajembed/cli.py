"""Command-line entry point.

One binary, subcommands for the whole workflow: dataset validation and
featurization, trajectory-loss tables, synthetic data generation, the three
training stages, index building, inference, benchmarking, segmentation, and
evaluation. Settings come from defaults, then an optional key=value config
file, then repeated --set KEY=VALUE flags; unknown keys are rejected and the
fully resolved configuration is logged and echoed next to every output.

Exit codes: 0 on success, 1 on domain errors (bad data, failed checks),
2 on usage errors (unknown flags, subcommands, or config keys).
"""

from __future__ import annotations

import dataclasses
import json
import logging
import sys
from pathlib import Path

import click
import numpy as np

from .dtw import DtwWeights, dtw_mt
from .embedding import EmbeddingNet
from .errors import ConfigError, TrajembedError
from .evaluation import (
    BASELINE_TAGS,
    evaluate,
    export_embeddings,
    make_folds,
    report_tsv,
    summarize_folds,
)
from .features import build_training_data, task_feature_matrix
from .grids import CompactGridConfig, GridSpec
from .records import load_dataset, save_dataset
from .retrieval import (
    TrajectoryLibrary,
    bench as run_bench,
    build_index,
    infer as run_infer,
    load_index,
    save_index,
)
from .segmentation import (
    RankWeights,
    build_ranking_pool,
    build_scene_context,
    generate_candidates,
    select_parts,
)
from .synthetic import SyntheticConfig, gen_synthetic
from .text import Vocabulary, bag_of_words
from .trajectories import normalize_trajectory
from .training import (
    JointEmbedding,
    TrainConfig,
    TrainingLog,
    _build_triples,
    build_relevance_sets,
    finetune_h3,
    pretrain_h2pl,
    pretrain_h2tau,
    pretrain_sda,
)

log = logging.getLogger("trajembed")


# -- configuration plumbing ----------------------------------------------------


def _parse_value(raw: str, field_type):
    if field_type is bool:
        lowered = raw.strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"expected a boolean, got {raw!r}")
    if field_type is int:
        return int(raw)
    if field_type is float:
        return float(raw)
    return raw


def resolve_config(config_cls, config_path, sets, seed=None):
    """defaults -> config file -> --set overrides, rejecting unknown keys."""
    known = {f.name: f for f in dataclasses.fields(config_cls)}
    values: dict = {}

    def apply(key: str, raw: str, where: str):
        if key not in known:
            raise ConfigError(f"unknown config key {key!r} ({where})")
        field_type = known[key].type
        if isinstance(field_type, str):
            field_type = {"int": int, "float": float, "bool": bool, "str": str}.get(
                field_type.split("|")[0].strip(), str
            )
        try:
            values[key] = _parse_value(raw, field_type)
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from exc

    if config_path:
        for line_no, line in enumerate(
            Path(config_path).read_text(encoding="utf-8").splitlines(), 1
        ):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{config_path}:{line_no}: expected KEY=VALUE")
            key, raw = line.split("=", 1)
            apply(key.strip(), raw.strip(), f"{config_path}:{line_no}")
    for item in sets or ():
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, raw = item.split("=", 1)
        apply(key.strip(), raw.strip(), "--set")
    if seed is not None and "seed" in known:
        values["seed"] = seed
    try:
        config = config_cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    log.info("resolved config: %s", _config_text(config).replace("\n", " "))
    return config


def _config_text(config) -> str:
    return "\n".join(
        f"{f.name}={getattr(config, f.name)}"
        for f in dataclasses.fields(config)
        if not f.name.startswith("_")
    )


def echo_config(config, out_path) -> None:
    """Write the resolved configuration next to an output file/directory."""
    out_path = Path(out_path)
    target = out_path / "resolved.cfg" if out_path.is_dir() else out_path.with_suffix(
        out_path.suffix + ".config"
    )
    target.write_text(_config_text(config) + "\n", encoding="utf-8")


_CONFIG_OPTIONS = [
    click.option("--config", "config_path", type=click.Path(exists=True), default=None,
                 help="key=value config file"),
    click.option("--set", "sets", multiple=True, metavar="KEY=VALUE",
                 help="override a config key"),
    click.option("--seed", type=int, default=None, help="override the config seed"),
    click.option("--determinism/--no-determinism", default=True,
                 help="force deterministic reductions (always on in this build)"),
    click.option("--workers", type=int, default=None,
                 help="worker count hint (current implementation is single-process)"),
]


def training_options(fn):
    for option in reversed(_CONFIG_OPTIONS):
        fn = option(fn)
    return fn


def _tsv_sink(stream):
    header_written = False

    def sink(row):
        nonlocal header_written
        if not header_written:
            stream.write("stage\tepoch\tmean_loss\tviolation_rate\tvalidation_accuracy\n")
            header_written = True
        val = row["validation_accuracy"]
        stream.write(
            f"{row['stage']}\t{row['epoch']}\t{row['mean_loss']:.6f}"
            f"\t{row['violation_rate']:.6f}\t{'' if val is None else f'{val:.6f}'}\n"
        )
        stream.flush()

    return sink


# -- the command group ----------------------------------------------------------


@click.group(no_args_is_help=False)
def cli():
    """Joint part/language/trajectory embedding toolkit."""


@cli.command()
@click.argument("dataset_path", type=click.Path(exists=True))
@click.option("--normalize-quaternions", is_flag=True, default=False)
def validate(dataset_path, normalize_quaternions):
    """Validate a dataset file and report record counts."""
    dataset = load_dataset(dataset_path, normalize_quaternions=normalize_quaternions)
    click.echo(
        f"ok: {len(dataset.scenes)} scenes, {len(dataset.parts)} parts, "
        f"{len(dataset.manuals)} manuals, {len(dataset.instructions)} instructions, "
        f"{len(dataset.trajectories)} trajectories, {len(dataset.tasks)} tasks"
    )


@cli.command()
@click.argument("dataset_path", type=click.Path(exists=True))
@click.option("--out", "out_dir", type=click.Path(), required=True)
@training_options
def featurize(dataset_path, out_dir, config_path, sets, seed, determinism, workers):
    """Emit per-example feature vectors for inspection."""
    config = resolve_config(TrainConfig, config_path, sets, seed)
    dataset = load_dataset(dataset_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    vocabulary = Vocabulary.build(i.text for i in dataset.instructions.values())
    data = build_training_data(
        dataset,
        sorted(dataset.tasks),
        vocabulary,
        resample_mode=config.resample_mode,
        use_candidate_views=config.use_candidate_views,
    )
    with open(out / "features.jsonl", "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"kind": "vocabulary", "terms": list(vocabulary.terms)}) + "\n")
        for i, tid in enumerate(data.task_ids):
            fh.write(
                json.dumps(
                    {
                        "kind": "task_features",
                        "task_id": tid,
                        "grid": data.task_grids[i][0].tolist(),
                        "word_counts": data.task_bows[i].tolist(),
                    }
                )
                + "\n"
            )
        for tid, feats in zip(data.pool_ids, data.pool_features):
            fh.write(
                json.dumps(
                    {"kind": "trajectory_features", "traj_id": tid, "flattened": feats.tolist()}
                )
                + "\n"
            )
    echo_config(config, out)
    click.echo(f"wrote {out / 'features.jsonl'}")


@cli.command()
@click.argument("dataset_path", type=click.Path(exists=True))
@click.option("--pairs", "pairs_path", type=click.Path(exists=True), required=True,
              help="TSV of trajectory id pairs")
@training_options
def dtw(dataset_path, pairs_path, config_path, sets, seed, determinism, workers):
    """Print trajectory-loss values for id pairs as TSV."""
    weights = resolve_config(DtwWeights, config_path, sets)
    dataset = load_dataset(dataset_path)
    click.echo("id_a\tid_b\tloss")
    for line in Path(pairs_path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        id_a, id_b = line.split("\t")[:2]
        value = dtw_mt(dataset.trajectories[id_a], dataset.trajectories[id_b], weights)
        click.echo(f"{id_a}\t{id_b}\t{value:.6f}")


@cli.command("gen-synth")
@click.option("--out", "out_path", type=click.Path(), required=True)
@training_options
def gen_synth(out_path, config_path, sets, seed, determinism, workers):
    """Generate a synthetic dataset."""
    config = resolve_config(SyntheticConfig, config_path, sets, seed)
    dataset = gen_synthetic(config)
    save_dataset(dataset, out_path)
    echo_config(config, Path(out_path))
    click.echo(f"wrote {out_path} ({len(dataset.tasks)} tasks)")


def _prepare_training(dataset, config):
    task_ids = sorted(dataset.tasks)
    vocabulary = Vocabulary.build(
        dataset.instructions[dataset.tasks[t].instruction_id].text for t in task_ids
    )
    data = build_training_data(
        dataset,
        task_ids,
        vocabulary,
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
    return data, triples, dissimilar_mask


@cli.command("pretrain-sda")
@click.argument("dataset_path", type=click.Path(exists=True))
@click.option("--in", "in_checkpoint", type=click.Path(exists=True), default=None)
@click.option("--out", "out_checkpoint", type=click.Path(), required=True)
@training_options
def pretrain_sda_cmd(dataset_path, in_checkpoint, out_checkpoint, config_path, sets, seed,
                     determinism, workers):
    """Stage 1: layerwise de-noising autoencoder initialization."""
    config = resolve_config(TrainConfig, config_path, sets, seed)
    dataset = load_dataset(dataset_path)
    rng = np.random.default_rng(config.seed)
    data, _, _ = _prepare_training(dataset, config)
    if in_checkpoint:
        net = EmbeddingNet.load(in_checkpoint)
    else:
        net = EmbeddingNet.build(data.vocabulary, rng, resample_mode=config.resample_mode)
    tlog = TrainingLog(sink=_tsv_sink(sys.stderr))
    pretrain_sda(net, data, config, rng, tlog)
    net.save(out_checkpoint)
    echo_config(config, Path(out_checkpoint))
    click.echo(f"wrote {out_checkpoint}")


@cli.command("pretrain-metric")
@click.argument("dataset_path", type=click.Path(exists=True))
@click.option("--in", "in_checkpoint", type=click.Path(exists=True), required=True)
@click.option("--out", "out_checkpoint", type=click.Path(), required=True)
@training_options
def pretrain_metric_cmd(dataset_path, in_checkpoint, out_checkpoint, config_path, sets,
                        seed, determinism, workers):
    """Stage 2: margin pre-training of both pair spaces."""
    config = resolve_config(TrainConfig, config_path, sets, seed)
    dataset = load_dataset(dataset_path)
    rng = np.random.default_rng(config.seed)
    data, triples, dissimilar_mask = _prepare_training(dataset, config)
    net = EmbeddingNet.load(in_checkpoint)
    tlog = TrainingLog(sink=_tsv_sink(sys.stderr))
    pretrain_h2pl(net, data, triples, config, rng, tlog)
    pretrain_h2tau(net, data, triples, dissimilar_mask, config, rng, tlog)
    net.save(out_checkpoint)
    echo_config(config, Path(out_checkpoint))
    click.echo(f"wrote {out_checkpoint}")


@cli.command("finetune")
@click.argument("dataset_path", type=click.Path(exists=True))
@click.option("--in", "in_checkpoint", type=click.Path(exists=True), default=None)
@click.option("--out", "out_checkpoint", type=click.Path(), required=True)
@training_options
def finetune_cmd(dataset_path, in_checkpoint, out_checkpoint, config_path, sets, seed,
                 determinism, workers):
    """Stage 3: fine-tune the whole network on the joint-space hinge."""
    config = resolve_config(TrainConfig, config_path, sets, seed)
    dataset = load_dataset(dataset_path)
    estimator = JointEmbedding(
        **{f.name: getattr(config, f.name) for f in dataclasses.fields(TrainConfig)},
        log_sink=_tsv_sink(sys.stderr),
    )
    if in_checkpoint:
        # Continue from a (pre-trained) checkpoint: reuse its parameters but
        # run only the fine-tuning stage.
        net = EmbeddingNet.load(in_checkpoint)
        rng = np.random.default_rng(config.seed)
        task_ids = sorted(dataset.tasks)
        shuffled = list(task_ids)
        rng.shuffle(shuffled)
        n_val = int(round(config.validation_fraction * len(shuffled)))
        val_ids, train_ids = sorted(shuffled[:n_val]), sorted(shuffled[n_val:])
        data, triples, dissimilar_mask = _prepare_training_subset(dataset, config, train_ids)
        validation = _validation_data(dataset, config, val_ids, data)
        tlog = TrainingLog(sink=_tsv_sink(sys.stderr))
        finetune_h3(net, data, triples, dissimilar_mask, config, rng, tlog, validation)
        net.save(out_checkpoint)
        Path(str(out_checkpoint) + ".log.tsv").write_text(tlog.to_tsv(), encoding="utf-8")
    else:
        estimator.fit(dataset)
        estimator.net_.save(out_checkpoint)
        Path(str(out_checkpoint) + ".log.tsv").write_text(
            estimator.log_.to_tsv(), encoding="utf-8"
        )
    echo_config(config, Path(out_checkpoint))
    click.echo(f"wrote {out_checkpoint}")


def _prepare_training_subset(dataset, config, task_ids):
    vocabulary = Vocabulary.build(
        dataset.instructions[dataset.tasks[t].instruction_id].text for t in task_ids
    )
    data = build_training_data(
        dataset,
        task_ids,
        vocabulary,
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
    return data, triples, dissimilar_mask


def _validation_data(dataset, config, val_ids, data):
    from .dtw import dtw_matrix
    from .training import ValidationData

    if not val_ids:
        return None
    grids, bows = task_feature_matrix(dataset, val_ids, data.vocabulary)
    experts = [dataset.trajectories[dataset.tasks[t].optimal_demo_id] for t in val_ids]
    pool = [dataset.trajectories[t] for t in data.pool_ids]
    return ValidationData(
        grids=grids, bows=bows, expert_delta=dtw_matrix(experts, pool)
    )


@cli.group()
def index():
    """Trajectory index operations."""


@index.command("build")
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--dataset", "dataset_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def index_build(model_path, dataset_path, out_path):
    """Pre-embed every trajectory of a dataset into an index file."""
    net = EmbeddingNet.load(model_path)
    dataset = load_dataset(dataset_path)
    idx = build_index(net, list(dataset.trajectories.values()))
    save_index(idx, out_path)
    click.echo(f"wrote {out_path} ({len(idx)} trajectories)")


@cli.command()
@click.option("--index", "index_path", type=click.Path(exists=True), required=True)
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--dataset", "dataset_path", type=click.Path(exists=True), required=True)
@click.option("--scene", "scene_id", required=True)
@click.option("--instruction", "instruction_text", required=True)
@click.option("--part", "part_id", default=None,
              help="part id (defaults to the scene's only part)")
def infer(index_path, model_path, dataset_path, scene_id, instruction_text, part_id):
    """Retrieve the best trajectory for a part + instruction."""
    net = EmbeddingNet.load(model_path)
    idx = load_index(index_path)
    dataset = load_dataset(dataset_path)
    if scene_id not in dataset.scenes:
        raise TrajembedError(f"unknown scene {scene_id!r}")
    scene_parts = [p for p in dataset.parts.values() if p.scene_id == scene_id]
    if part_id is None:
        if len(scene_parts) != 1:
            raise TrajembedError(
                f"scene {scene_id!r} has {len(scene_parts)} parts; pass --part "
                f"(one of: {', '.join(sorted(p.part_id for p in scene_parts))})"
            )
        part = scene_parts[0]
    else:
        part = dataset.parts[part_id]
    from .grids import compact_grids

    grid = compact_grids(part, dataset.scenes[scene_id], net.grid_config).flattened
    bow = bag_of_words(instruction_text, net.vocabulary)
    traj_id, similarity = run_infer(idx, net, grid, bow)
    click.echo(f"{traj_id}\t{similarity:.6f}")


@cli.command()
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--dataset", "dataset_path", type=click.Path(exists=True), required=True)
@click.option("--index", "index_path", type=click.Path(exists=True), default=None)
@click.option("--reps", type=int, default=10000, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def bench(model_path, dataset_path, index_path, reps, out_path):
    """Compare pre-embedded against exhaustive inference latency."""
    net = EmbeddingNet.load(model_path)
    dataset = load_dataset(dataset_path)
    library = TrajectoryLibrary.from_trajectories(
        list(dataset.trajectories.values()), net.resample_mode
    )
    idx = load_index(index_path) if index_path else build_index(net, library)
    task_ids = sorted(dataset.tasks)
    grids, bows = task_feature_matrix(dataset, task_ids, net.vocabulary, net.grid_config)
    queries = list(zip(grids, bows))
    report = run_bench(idx, net, library, queries, repetitions=reps)
    Path(out_path).write_text(report.to_tsv(), encoding="utf-8")
    click.echo(f"speedup {report.speedup:.1f}x over {reps} repetitions")


@cli.command()
@click.argument("scene_id")
@click.option("--dataset", "dataset_path", type=click.Path(exists=True), required=True)
@click.option("--manual", "manual_id", required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--grid-cells", type=int, default=100, show_default=True,
              help="ranking grid resolution per edge")
@click.option("--grid-cell-size", type=float, default=0.0025, show_default=True)
def segment(scene_id, dataset_path, manual_id, out_path, grid_cells, grid_cell_size):
    """Generate part candidates for a scene and rank them per manual step."""
    dataset = load_dataset(dataset_path)
    if scene_id not in dataset.scenes:
        raise TrajembedError(f"unknown scene {scene_id!r}")
    if manual_id not in dataset.manuals:
        raise TrajembedError(f"unknown manual {manual_id!r}")
    scene = dataset.scenes[scene_id]
    train_tasks = [
        t
        for t, task in dataset.tasks.items()
        if dataset.parts[task.part_id].scene_id != scene_id
    ]
    vocabulary = Vocabulary.build(
        dataset.instructions[dataset.tasks[t].instruction_id].text for t in train_tasks
    )
    grid_spec = GridSpec(cells_per_side=grid_cells, cell_size=grid_cell_size)
    pool = build_ranking_pool(dataset, train_tasks, vocabulary, grid_spec)
    candidates = generate_candidates(scene)
    ctx = build_scene_context(scene, dataset.pointing_hints.get(scene_id))
    instructions = dataset.manual_instructions(manual_id)
    selection = select_parts(candidates, scene, instructions, pool, ctx)
    lines = ["candidate\tstep\tscore\tadjusted\tselected\tpoint_indices"]
    for i, cand in enumerate(selection.candidate_indices):
        for j in range(len(instructions)):
            lines.append(
                f"{i}\t{j}\t{selection.raw_scores[i, j]:.6f}"
                f"\t{selection.adjusted_scores[i, j]:.6f}"
                f"\t{int(selection.selected[j] == i)}"
                f"\t{','.join(map(str, cand.tolist()))}"
            )
    Path(out_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    click.echo(
        f"{len(selection.candidate_indices)} candidates; selections: "
        f"{selection.selected}"
    )


@cli.command("eval")
@click.option("--dataset", "dataset_path", type=click.Path(exists=True), required=True)
@click.option("--baseline", "baseline", type=click.Choice(BASELINE_TAGS), default=None)
@click.option("--model", "model_path", type=click.Path(exists=True), default=None)
@click.option("--folds", "n_folds", type=int, default=5, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@training_options
def eval_cmd(dataset_path, baseline, model_path, n_folds, out_path, config_path, sets,
             seed, determinism, workers):
    """Cross-validated evaluation of a baseline tag or model checkpoint."""
    if (baseline is None) == (model_path is None):
        raise click.UsageError("pass exactly one of --baseline or --model")
    config = resolve_config(TrainConfig, config_path, sets, seed)
    dataset = load_dataset(dataset_path)
    split = make_folds(
        dataset, seed=config.seed, n_folds=n_folds,
        validation_fraction=config.validation_fraction,
    )
    reports = []
    for fold in range(n_folds):
        if baseline is not None:
            reports.append(evaluate(baseline, fold, dataset, split, config=config))
        else:
            net = EmbeddingNet.load(model_path)
            predictor = _NetPredictor(net, dataset, split.train_ids(fold))
            reports.append(evaluate(predictor, fold, dataset, split, config=config))
        log.info("fold %d: %s", fold, reports[-1].row())
    summary = summarize_folds(reports)
    Path(out_path).write_text(report_tsv(reports, summary), encoding="utf-8")
    echo_config(config, Path(out_path))
    click.echo(
        f"accuracy {summary['accuracy_mean']:.3f} (+-{summary['accuracy_std']:.3f})"
    )


class _NetPredictor:
    """Adapter giving a bare checkpoint the estimator predict() contract."""

    def __init__(self, net: EmbeddingNet, dataset, train_ids):
        self.net = net
        pool_ids = sorted({d for t in train_ids for d in dataset.tasks[t].demo_ids})
        feats = np.stack(
            [
                normalize_trajectory(dataset.trajectories[t], mode=net.resample_mode).flattened
                for t in pool_ids
            ]
        )
        self.pool_ids = pool_ids
        self.pool_emb = net.embed_traj(feats)

    def predict(self, dataset, task_ids):
        grids, bows = task_feature_matrix(
            dataset, task_ids, self.net.vocabulary, self.net.grid_config
        )
        chosen = (self.net.embed_task(grids, bows) @ self.pool_emb.T).argmax(axis=1)
        return [self.pool_ids[i] for i in chosen]


@cli.command("export-embeddings")
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--dataset", "dataset_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def export_embeddings_cmd(model_path, dataset_path, out_path):
    """Write task and trajectory embeddings as TSV for external plotting."""
    net = EmbeddingNet.load(model_path)
    dataset = load_dataset(dataset_path)
    export_embeddings(net, dataset, out_path)
    click.echo(f"wrote {out_path}")


def main(argv=None) -> int:
    """Dispatch argv to a subcommand; returns the process exit code."""
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.UsageError as exc:
        exc.show()
        return 2
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except click.ClickException as exc:
        exc.show()
        return 1
    except (TrajembedError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except click.exceptions.Abort:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
