import hashlib
import json
import logging
import time
from typing import Callable

import numpy as np

from src.bench.pipelines import region_feature_stage, region_select_stage, shared_stage
from src.core.config import applied_threads
from src.core.errors import GridFeatError, InvalidArgumentError, PipelineError
from src.models.feature_set import FeatureSet
from src.schemas.bench import PipelineKind, StageTimings
from src.schemas.run import RunConfig
from src.vqa.model import answer

logger = logging.getLogger(__name__)

STAGES: tuple[str, ...] = ("shared_conv", "region_feat", "region_select", "vqa")
TIMING_QUESTION: list[int] = [1, 2, 3, 4, 5]


def timed(fn: Callable, *args, **kwargs):
    """(result, elapsed milliseconds) on the monotonic performance counter."""
    start = time.perf_counter()
    result = fn(*args, **kwargs)
    return result, (time.perf_counter() - start) * 1e3


def fingerprint(kind: PipelineKind, config: RunConfig, image_shape: tuple[int, ...], n: int | None) -> str:
    payload = {
        "pipeline": kind,
        "backbone": config.backbone.model_dump(),
        "detector": config.detector.model_dump() if kind == "region" else None,
        "vqa": config.vqa.model_dump(exclude={"schedule"}),
        "image": list(image_shape),
        "n": n,
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:12]


def stage_times(kind: PipelineKind, image: np.ndarray, params: dict, vqa_params: dict, config: RunConfig,
                n: int | None = None, tokens: list[int] | None = None) -> tuple[dict[str, float], FeatureSet]:
    """One pass through the pipeline; milliseconds per stage (absent stages are 0)."""
    times = dict.fromkeys(STAGES, 0.0)
    image_size = tuple(image.shape[-2:])
    if kind == "grid":
        grid_map, times["shared_conv"] = timed(shared_stage, kind, image, params, config)
        features = FeatureSet.from_grid(grid_map, config.backbone.c5_stride("standard"), image_size)
    else:
        feature_map, times["shared_conv"] = timed(shared_stage, kind, image, params, config)
        candidates, times["region_feat"] = timed(region_feature_stage, feature_map, image, params, config)
        features, times["region_select"] = timed(region_select_stage, candidates, image, config, n)
    _, times["vqa"] = timed(answer, vqa_params, features, tokens or TIMING_QUESTION, config.vqa)
    return times, features


def time_pipeline(kind: PipelineKind, params: dict, vqa_params: dict, images: list[np.ndarray], config: RunConfig,
                  reps: int | None = None, warmup: int | None = None, n: int | None = None) -> StageTimings:
    """
    Median per-image stage timings.

    Every repetition runs all images through the pipeline; the first
    ``warmup`` repetitions are discarded. Each stage reports the median over
    the remaining repetitions and ``total_ms`` is the sum of the stage
    medians.

    Args:
        kind (PipelineKind): "region" or "grid".
        params (dict): Detector (region) or backbone (grid) weights.
        vqa_params (dict): VQA head weights sized for the pipeline's feature dim.
        images (list[np.ndarray]): Normalized 3xHxW inputs.
        config (RunConfig): Model configuration; ``bench`` supplies defaults.
        reps (int | None): Timed repetitions, >= 3.
        warmup (int | None): Discarded repetitions, >= 1.
        n (int | None): Region rows (defaults to ``detector.num_regions``).

    Raises:
        InvalidArgumentError: If reps < 3, warmup < 1 or there are no images.
        PipelineError: If a stage fails; completed repetitions are logged.
    """
    reps = config.bench.reps if reps is None else reps
    warmup = config.bench.warmup if warmup is None else warmup
    if reps < 3 or warmup < 1:
        raise InvalidArgumentError(f"timing needs reps >= 3 and warmup >= 1, got {reps} / {warmup}")
    if not images:
        raise InvalidArgumentError("timing needs at least one image")
    samples: list[dict[str, float]] = []
    num_features = 0
    for rep in range(warmup + reps):
        totals = dict.fromkeys(STAGES, 0.0)
        try:
            for image in images:
                times, features = stage_times(kind, image, params, vqa_params, config, n)
                num_features = features.num_features
                for stage, ms in times.items():
                    totals[stage] += ms / len(images)
        except GridFeatError as e:
            logger.error(f"{kind} pipeline failed in repetition {rep + 1}; completed: {samples}")
            raise PipelineError(f"{kind} pipeline failed after {max(rep - warmup, 0)} timed repetitions: {e.detail}") from e
        if rep >= warmup:
            samples.append(totals)
            logger.debug(f"{kind} repetition {rep - warmup + 1}/{reps}: {totals}")
    medians = {stage: float(np.median([s[stage] for s in samples])) for stage in STAGES}
    timings = StageTimings(
        pipeline=kind,
        shared_conv_ms=medians["shared_conv"],
        region_feat_ms=medians["region_feat"],
        region_select_ms=medians["region_select"],
        vqa_ms=medians["vqa"],
        total_ms=sum(medians.values()),
        num_features=num_features,
        num_classes=config.detector.num_classes if kind == "region" else 0,
        fingerprint=fingerprint(kind, config, images[0].shape, n),
        repetitions=reps,
        threads=applied_threads(),
    )
    logger.info(f"{kind}: total {timings.total_ms:.1f} ms, region share {timings.region_share:.1%}")
    return timings
