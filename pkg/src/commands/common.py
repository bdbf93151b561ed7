"""Options shared by every subcommand and the config resolution they feed."""
import logging
from pathlib import Path
from typing import Annotated, Optional

import typer

from src.core.config import load_config, log_resolved, parse_override
from src.schemas.run import RunConfig

logger = logging.getLogger(__name__)

ConfigOption = Annotated[
    Optional[list[Path]],
    typer.Option("--config", "-c", help="Key-value config file; repeatable, later files win."),
]
SetOption = Annotated[
    Optional[list[str]],
    typer.Option("--set", "-s", help="Override one key, e.g. detector.num_regions=36; repeatable."),
]
SeedOption = Annotated[Optional[int], typer.Option("--seed", help="Global seed (overrides the config).")]
VerboseOption = Annotated[bool, typer.Option("--verbose", "-v", help="Debug logging and progress bars.")]


def resolve(config: list[Path] | None, overrides: list[str] | None, seed: int | None = None,
            extra: dict | None = None, verbose: bool = False) -> RunConfig:
    """
    Load config files, apply ``--set`` overrides then flag-level overrides, and log the result.

    ``extra`` carries dotted keys set by dedicated flags (``--n`` and friends);
    they win over ``--set`` and are skipped when None.
    """
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    pairs = [parse_override(item) for item in overrides or []]
    pairs += [(key, value) for key, value in (extra or {}).items() if value is not None]
    if seed is not None:
        pairs.append(("seed", seed))
    resolved = load_config(config or [], pairs)
    log_resolved(resolved)
    return resolved


def parse_size(text: str) -> tuple[int, int]:
    """HxW -> (H, W)."""
    height, sep, width = text.lower().partition("x")
    if not sep or not height.isdigit() or not width.isdigit():
        raise typer.BadParameter(f"size must look like 600x1000, got {text!r}")
    return int(height), int(width)
