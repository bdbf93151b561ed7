import logging
from pathlib import Path
from typing import Annotated, Optional

import typer

from src.commands.common import ConfigOption, SeedOption, SetOption, VerboseOption, resolve
from src.core.config import GRIDFEAT_DATA_DIR
from src.data.dataset import build_vocabulary, export_dataset, load_manifest, load_split, regenerate, save_vocabulary

logger = logging.getLogger(__name__)

VOCAB_NAME = "vocab.json"


def gen_data(
    out: Annotated[Path, typer.Option("--out", "-o", help="Dataset directory.")] = GRIDFEAT_DATA_DIR,
    from_manifest: Annotated[Optional[Path], typer.Option(help="Regenerate the dataset described by this directory's manifest.")] = None,
    config: ConfigOption = None,
    overrides: SetOption = None,
    seed: SeedOption = None,
    verbose: VerboseOption = False,
) -> None:
    """Render the synthetic shapes-VQA dataset (train/val/test) and its vocabulary."""
    if from_manifest is not None:
        manifest = regenerate(load_manifest(from_manifest), out, verbose=verbose)
    else:
        resolved = resolve(config, overrides, seed, verbose=verbose)
        manifest = export_dataset(resolved.data, resolved.seed, out, verbose=verbose)
    vocab = build_vocabulary(load_split(out, "train"))
    save_vocabulary(vocab, out / VOCAB_NAME)
    counts = ", ".join(f"{split} {info.count}" for split, info in manifest.splits.items())
    typer.echo(f"Wrote {counts} scenes to {out} ({len(vocab.tokens)} tokens, {len(vocab.answers)} answers)")
