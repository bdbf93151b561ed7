"""CSV persistence of bench results and the markdown summaries built from them."""
import csv
import logging
from collections import defaultdict
from pathlib import Path
from typing import TypeVar

import numpy as np
from pydantic import BaseModel, ValidationError

from src.core.errors import FormatError
from src.schemas.bench import StageTimings, SweepRow
from src.utils.io import atomic_write

logger = logging.getLogger(__name__)

TIMING_HEADER: tuple[str, ...] = tuple(StageTimings.model_fields)
SWEEP_HEADER: tuple[str, ...] = tuple(SweepRow.model_fields)

Row = TypeVar("Row", bound=BaseModel)


def write_rows(rows: list[BaseModel], header: tuple[str, ...], path: str | Path) -> None:
    with atomic_write(path, "w") as f:
        writer = csv.DictWriter(f, fieldnames=header, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: "" if v is None else v for k, v in row.model_dump().items()})


def read_rows(model: type[Row], path: str | Path) -> list[Row]:
    """
    Read a CSV written by ``write_rows``; empty cells fall back to the field default.

    Raises:
        FormatError: On a header mismatch or an invalid row.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != tuple(model.model_fields):
            raise FormatError(f"{path}: unexpected header {reader.fieldnames}")
        try:
            return [model.model_validate({k: v for k, v in row.items() if v != ""}) for row in reader]
        except ValidationError as e:
            raise FormatError(f"{path}: invalid row: {e}") from e


def write_timings(rows: list[StageTimings], path: str | Path) -> None:
    write_rows(rows, TIMING_HEADER, path)


def read_timings(path: str | Path) -> list[StageTimings]:
    return read_rows(StageTimings, path)


class SweepLog:
    """
    Resumable sweep output: rows keyed by (sweep, value, pipeline, seed).

    Rows already present are never recomputed or duplicated; the CSV is
    rewritten atomically after each new row.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.rows: list[SweepRow] = read_rows(SweepRow, self.path) if self.path.exists() else []
        self._keys = {row.key for row in self.rows}
        if self.rows:
            logger.info(f"Resuming {self.path} with {len(self.rows)} rows")

    def done(self, sweep: str, value: str, pipeline: str, seed: int) -> bool:
        return (sweep, value, pipeline, seed) in self._keys

    def add(self, row: SweepRow) -> bool:
        """Append and persist a row; returns False if its key is already present."""
        if row.key in self._keys:
            logger.debug(f"Skipping duplicate sweep row {row.key}")
            return False
        self.rows.append(row)
        self._keys.add(row.key)
        write_rows(self.rows, SWEEP_HEADER, self.path)
        return True


def _table(header: list[str], body: list[list[str]]) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    lines += ["| " + " | ".join(row) + " |" for row in body]
    return "\n".join(lines)


def timings_report(rows: list[StageTimings]) -> str:
    """
    Inference-time breakdown: one line per timing row, stage columns in
    milliseconds, the region share and the speed-up over the slowest region row.
    """
    if not rows:
        return "_no timing rows_\n"
    region_totals = [r.total_ms for r in rows if r.pipeline == "region"]
    reference = max(region_totals) if region_totals else None
    body = []
    for r in rows:
        speedup = f"{reference / r.total_ms:.1f}x" if reference and r.total_ms else "-"
        body.append([
            r.pipeline, str(r.num_features), str(r.num_classes) if r.pipeline == "region" else "-",
            f"{r.shared_conv_ms:.1f}", f"{r.region_feat_ms:.1f}", f"{r.region_select_ms:.1f}",
            f"{r.vqa_ms:.1f}", f"{r.total_ms:.1f}", f"{r.region_share:.1%}", speedup,
        ])
    header = ["pipeline", "N", "classes", "shared conv (ms)", "region feat (ms)", "region select (ms)",
              "VQA (ms)", "total (ms)", "region share", "speed-up"]
    return "## Inference time breakdown\n\n" + _table(header, body) + "\n"


def sweep_report(rows: list[SweepRow]) -> str:
    """Accuracy mean and standard deviation over seeds per (sweep, value, pipeline)."""
    if not rows:
        return "_no sweep rows_\n"
    groups: dict[tuple[str, str, str], list[SweepRow]] = defaultdict(list)
    for row in rows:
        groups[(row.sweep, row.value, row.pipeline)].append(row)
    body = []
    for (sweep, value, pipeline), members in groups.items():
        scores = [m.accuracy for m in members if m.accuracy is not None]
        accuracy = f"{np.mean(scores):.4f} ± {np.std(scores):.4f}" if scores else "-"
        region_ms = [m.region_ms for m in members if m.region_ms is not None]
        failed = sum(m.status != "ok" for m in members)
        body.append([
            sweep, value, pipeline, str(members[0].num_features), accuracy,
            f"{np.median(region_ms):.1f}" if region_ms else "-", str(len(members)), str(failed),
        ])
    header = ["sweep", "value", "pipeline", "N", "accuracy (mean ± sd)", "region ms", "seeds", "failed"]
    return "## Sweeps\n\n" + _table(header, body) + "\n"
