from dotenv import load_dotenv, dotenv_values
from pydantic import ValidationError
from pathlib import Path
from typing import Any, Iterable
import json
import logging
import os

from src.core.errors import ConfigError
from src.schemas.run import RunConfig

load_dotenv()

logger = logging.getLogger(__name__)

# Logging Configuration
GRIDFEAT_LOG_LEVEL = os.getenv("GRIDFEAT_LOG_LEVEL", "INFO")

# Compute Configuration
GRIDFEAT_THREADS = int(os.getenv("GRIDFEAT_THREADS", "1"))

# Storage Configuration
GRIDFEAT_DATA_DIR = Path(os.getenv("GRIDFEAT_DATA_DIR", "./data"))
GRIDFEAT_RUNS_DIR = Path(os.getenv("GRIDFEAT_RUNS_DIR", "./runs"))

THREAD_ENV_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


def apply_thread_limit(threads: int = GRIDFEAT_THREADS) -> None:
    """Pin BLAS thread pools; only effective before numpy is first imported. Explicit env values win."""
    for var in THREAD_ENV_VARS:
        os.environ.setdefault(var, str(threads))


def threads_from_argv(argv: list[str]) -> int | None:
    """
    The ``--threads`` value of a command line, read before the CLI parser runs.

    Malformed values return None; the parser reports them once it runs.
    """
    for i, arg in enumerate(argv):
        if arg == "--threads":
            raw = argv[i + 1] if i + 1 < len(argv) else ""
        elif arg.startswith("--threads="):
            raw = arg.split("=", 1)[1]
        else:
            continue
        return int(raw) if raw.isdigit() and int(raw) > 0 else None
    return None


def applied_threads() -> int:
    """Thread count the BLAS pools run with: OMP_NUM_THREADS when set, else GRIDFEAT_THREADS."""
    raw = os.getenv("OMP_NUM_THREADS", "")
    return int(raw) if raw.isdigit() and int(raw) > 0 else int(os.getenv("GRIDFEAT_THREADS", GRIDFEAT_THREADS))


def decode_value(raw: str | None) -> Any:
    """JSON when it parses (numbers, lists, booleans, null), the raw string otherwise."""
    if raw is None:
        return None
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def _set_path(tree: dict, key: str, value: Any) -> None:
    parts = key.split(".")
    if any(not part for part in parts):
        raise ConfigError(f"malformed config key {key!r}")
    node = tree
    for part in parts[:-1]:
        child = node.setdefault(part, {})
        if not isinstance(child, dict):
            raise ConfigError(f"config key {key!r} descends into scalar {part!r}")
        node = child
    node[parts[-1]] = value


def parse_override(item: str) -> tuple[str, str]:
    """Split a ``key=value`` command-line override."""
    key, sep, value = item.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"override {item!r} must look like section.key=value")
    return key.strip(), value.strip()


def load_config(paths: Iterable[str | Path] = (), overrides: Iterable[tuple[str, Any]] = ()) -> RunConfig:
    """
    Merge key-value config files and overrides into a validated RunConfig.

    Files are read in order with ``dotenv_values``; keys are dotted paths such
    as ``detector.rpn.nms_iou``. A key set again by a later file or by an
    override wins, and the replacement is logged.

    Args:
        paths: Config files, lowest precedence first.
        overrides: (dotted key, value) pairs applied last. String values are
            JSON-decoded like file values.

    Returns:
        RunConfig: The resolved configuration.

    Raises:
        ConfigError: On unreadable files, unknown keys, type mismatches or
            violated invariants.
    """
    flat: dict[str, Any] = {}
    sources: dict[str, str] = {}

    def assign(key: str, value: Any, source: str) -> None:
        if key in flat and flat[key] != value:
            logger.info(f"Config key {key} = {flat[key]!r} ({sources[key]}) overridden by {value!r} ({source})")
        flat[key] = value
        sources[key] = source

    for path in paths:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file {path} not found")
        for key, raw in dotenv_values(path).items():
            assign(key, decode_value(raw), str(path))
    for key, value in overrides:
        assign(key, decode_value(value) if isinstance(value, str) else value, "command line")

    tree: dict = {}
    for key, value in flat.items():
        _set_path(tree, key, value)
    try:
        return RunConfig.model_validate(tree)
    except ValidationError as exc:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}" for err in exc.errors()
        )
        raise ConfigError(f"invalid configuration: {problems}") from exc


def log_resolved(config: RunConfig) -> None:
    logger.info(f"Resolved config: {config.model_dump_json()}")
