import logging
from pathlib import Path
from typing import Annotated, Optional

import numpy as np
import typer

from src.bench.pipelines import random_weights
from src.bench.report import read_timings, sweep_report, timings_report, write_timings
from src.bench.sweeps import SWEEPS, run_sweep
from src.bench.timing import time_pipeline
from src.commands.common import ConfigOption, SeedOption, SetOption, VerboseOption, resolve
from src.core.config import GRIDFEAT_DATA_DIR, GRIDFEAT_RUNS_DIR
from src.core.errors import PipelineError
from src.selftest.checks import CHECKS, run_selftest
from src.utils.io import atomic_write

logger = logging.getLogger(__name__)

PIPELINE_CHOICES = {"region": ("region",), "grid": ("grid",), "both": ("region", "grid")}


def write_report(text: str, path: Path | None) -> None:
    if path is None:
        typer.echo(text)
        return
    with atomic_write(path, "w") as f:
        f.write(text)


def bench(
    out: Annotated[Path, typer.Option("--out", "-o", help="StageTimings CSV.")] = GRIDFEAT_RUNS_DIR / "timings.csv",
    pipeline: Annotated[str, typer.Option("--pipeline", "-p", help="region, grid or both.")] = "both",
    classes: Annotated[Optional[int], typer.Option(help="detector.num_classes.")] = None,
    n: Annotated[Optional[int], typer.Option("--n", help="detector.num_regions.")] = None,
    reps: Annotated[Optional[int], typer.Option(help="bench.reps (>= 3).")] = None,
    warmup: Annotated[Optional[int], typer.Option(help="bench.warmup (>= 1).")] = None,
    report: Annotated[Optional[Path], typer.Option(help="Markdown breakdown; printed when omitted.")] = None,
    config: ConfigOption = None,
    overrides: SetOption = None,
    seed: SeedOption = None,
    verbose: VerboseOption = False,
) -> None:
    """
    Time the pipelines stage by stage on random images of bench.image_height x bench.image_width.

    Weights are untrained: stage cost does not depend on their values.
    """
    if pipeline not in PIPELINE_CHOICES:
        raise typer.BadParameter(f"pipeline must be one of {sorted(PIPELINE_CHOICES)}, got {pipeline!r}")
    resolved = resolve(config, overrides, seed, verbose=verbose, extra={
        "detector.num_classes": classes,
        "detector.num_regions": n,
        "bench.reps": reps,
        "bench.warmup": warmup,
    })
    rng = np.random.default_rng(resolved.seed)
    shape = (3, resolved.bench.image_height, resolved.bench.image_width)
    images = [rng.standard_normal(shape).astype(np.float32) for _ in range(resolved.bench.num_images)]
    rows = []
    for kind in PIPELINE_CHOICES[pipeline]:
        params, vqa_params = random_weights(kind, resolved, resolved.seed)
        rows.append(time_pipeline(kind, params, vqa_params, images, resolved))
    write_timings(rows, out)
    write_report(timings_report(read_timings(out)), report)


def sweep(
    kind: Annotated[str, typer.Option("--kind", "-k", help=f"One of {', '.join(SWEEPS)}.")],
    data: Annotated[Path, typer.Option("--data", "-d", help="Dataset directory.")] = GRIDFEAT_DATA_DIR,
    out: Annotated[Optional[Path], typer.Option("--out", "-o", help="Sweep CSV (resumed if present).")] = None,
    work_dir: Annotated[Optional[Path], typer.Option(help="Pretraining cache and resolved config.")] = None,
    report: Annotated[Optional[Path], typer.Option(help="Markdown summary; printed when omitted.")] = None,
    config: ConfigOption = None,
    overrides: SetOption = None,
    seed: SeedOption = None,
    verbose: VerboseOption = False,
) -> None:
    """Run or resume a factor sweep; rows already in the CSV are skipped."""
    if kind not in SWEEPS:
        raise typer.BadParameter(f"sweep must be one of {list(SWEEPS)}, got {kind!r}")
    resolved = resolve(config, overrides, seed, verbose=verbose)
    work_dir = work_dir or GRIDFEAT_RUNS_DIR / kind
    rows = run_sweep(kind, resolved, data, out or work_dir / f"{kind}.csv", work_dir, verbose=verbose)
    write_report(sweep_report(rows), report)


def selftest(
    full: Annotated[bool, typer.Option(help="Trial counts of the acceptance bar (slower).")] = False,
    only: Annotated[Optional[list[str]], typer.Option(help=f"Run just these checks: {', '.join(CHECKS)}.")] = None,
    seed: Annotated[int, typer.Option(help="Seed of the random instances.")] = 0,
    verbose: VerboseOption = False,
) -> None:
    """Run the oracle and invariant suite in-process."""
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    unknown = sorted(set(only or []) - set(CHECKS))
    if unknown:
        raise typer.BadParameter(f"unknown checks {unknown}; choose from {list(CHECKS)}")
    results = run_selftest(seed=seed, full=full, only=only)
    for result in results:
        typer.echo(f"{'PASS' if result.ok else 'FAIL'}  {result.name:<22} {result.seconds:7.2f}s  {result.detail}")
    failed = [r.name for r in results if not r.ok]
    if failed:
        raise PipelineError(f"{len(failed)} of {len(results)} checks failed: {', '.join(failed)}")
