import json
import logging
from pathlib import Path
from typing import Annotated, Optional

import typer

from src.bench.pipelines import random_weights
from src.bench.sweeps import Experiment
from src.commands.common import ConfigOption, SeedOption, SetOption, VerboseOption, resolve
from src.core.config import GRIDFEAT_DATA_DIR
from src.data.dataset import save_vocabulary
from src.detector.pretrain import PRETRAIN_MODES, pretrain
from src.schemas.vqa import Schedule
from src.utils.io import write_json
from src.utils.weights import load_weights, save_weights
from src.vqa.model import build_vqa
from src.vqa.train import evaluate_vqa, train_vqa, write_loss_log

logger = logging.getLogger(__name__)

DataOption = Annotated[Path, typer.Option("--data", "-d", help="Dataset directory written by gen-data.")]
PipelineOption = Annotated[str, typer.Option("--pipeline", "-p", help="region or grid.")]


def check_pipeline(pipeline: str) -> str:
    if pipeline not in ("region", "grid"):
        raise typer.BadParameter(f"pipeline must be region or grid, got {pipeline!r}")
    return pipeline


def visual_weights(path: Path | None, pipeline: str, config) -> dict:
    """Weights from ``path``, or an untrained seeded init (logged) when none is given."""
    if path is not None:
        return load_weights(path)
    logger.warning(f"No --weights given; using an untrained {pipeline} network (seed {config.seed})")
    return random_weights(pipeline, config, config.seed)[0]


def pretrain_cmd(
    out: Annotated[Path, typer.Option("--out", "-o", help="GFWT file for the trained weights.")],
    data: DataOption = GRIDFEAT_DATA_DIR,
    mode: Annotated[str, typer.Option(help="classification, detection or detection_attributes.")] = "detection_attributes",
    iterations: Annotated[Optional[int], typer.Option(help="Defaults to bench.pretrain_iterations.")] = None,
    batch_size: Annotated[Optional[int], typer.Option(help="Defaults to bench.pretrain_batch_size.")] = None,
    loss_log: Annotated[Optional[Path], typer.Option(help="CSV of (iteration, loss, lr).")] = None,
    config: ConfigOption = None,
    overrides: SetOption = None,
    seed: SeedOption = None,
    verbose: VerboseOption = False,
) -> None:
    """Pretrain the backbone (and detector) on the train split with the scaled detector_1x schedule."""
    if mode not in PRETRAIN_MODES:
        raise typer.BadParameter(f"mode must be one of {list(PRETRAIN_MODES)}, got {mode!r}")
    resolved = resolve(config, overrides, seed, verbose=verbose)
    exp = Experiment(resolved, data, out.parent, verbose=verbose)
    schedule = Schedule.preset("detector_1x").scaled(
        iterations or resolved.bench.pretrain_iterations, batch_size or resolved.bench.pretrain_batch_size
    )
    result = pretrain(exp.pretrain_samples(), mode, resolved.backbone, resolved.detector, schedule,
                      seed=resolved.seed, verbose=verbose)
    save_weights(result.params, out)
    if loss_log is not None:
        write_loss_log(result.log, loss_log)
    typer.echo(f"Saved {len(result.params)} tensors to {out} (final loss {result.losses[-1]:.4f})")


def train_vqa_cmd(
    out: Annotated[Path, typer.Option("--out", "-o", help="GFWT file for the trained VQA head.")],
    data: DataOption = GRIDFEAT_DATA_DIR,
    pipeline: PipelineOption = "grid",
    weights: Annotated[Optional[Path], typer.Option(help="Pretrained detector / backbone GFWT.")] = None,
    features_dir: Annotated[Optional[Path], typer.Option(help="GFVQ cache directory (read if present, written otherwise).")] = None,
    iterations: Annotated[Optional[int], typer.Option(help="Defaults to bench.vqa_iterations.")] = None,
    batch_size: Annotated[Optional[int], typer.Option(help="Defaults to bench.vqa_batch_size.")] = None,
    loss_log: Annotated[Optional[Path], typer.Option(help="CSV of (iteration, loss, lr).")] = None,
    config: ConfigOption = None,
    overrides: SetOption = None,
    seed: SeedOption = None,
    verbose: VerboseOption = False,
) -> None:
    """
    Train the VQA head on frozen features of the train split and score it on test.

    Writes the head weights, ``<out>.vocab.json`` and ``<out>.metrics.json``.
    """
    check_pipeline(pipeline)
    resolved = resolve(config, overrides, seed, verbose=verbose)
    exp = Experiment(resolved, data, out.parent, verbose=verbose)
    params = visual_weights(weights, pipeline, resolved)
    train = exp.features(pipeline, params, "train", cache_dir=features_dir)
    test = exp.features(pipeline, params, "test", cache_dir=features_dir)
    dim = next(iter(train.values())).dim
    head = build_vqa(len(exp.vocab.tokens), len(exp.vocab.answers), dim, resolved.vqa, resolved.seed)
    schedule = resolved.vqa.schedule.scaled(
        iterations or resolved.bench.vqa_iterations, batch_size or resolved.bench.vqa_batch_size
    )
    result = train_vqa(head, exp.examples("train"), train, resolved.vqa, schedule, seed=resolved.seed, verbose=verbose)
    metrics = evaluate_vqa(result.params, exp.examples("test"), test, resolved.vqa)
    save_weights(result.params, out)
    save_vocabulary(exp.vocab, out.with_suffix(".vocab.json"))
    write_json(out.with_suffix(".metrics.json"), {"pipeline": pipeline, **metrics})
    if loss_log is not None:
        write_loss_log(result.log, loss_log)
    typer.echo(json.dumps({"pipeline": pipeline, **metrics}, sort_keys=True))
