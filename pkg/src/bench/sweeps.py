"""
Factor sweeps over the synthetic dataset.

Every sweep writes SweepRows into a resumable SweepLog; a cell whose key is
already in the log is skipped. Pretrained weights are cached under the work
directory so cells sharing a pretraining run train it once.
"""
from functools import cached_property
import logging
from pathlib import Path
from typing import Callable

import numpy as np

from src.backbone.preprocess import resize_shortest
from src.backbone.resnet import grid_count
from src.bench.pipelines import extract_features, prepare_image, random_weights
from src.bench.report import SweepLog
from src.bench.timing import time_pipeline
from src.core.errors import GridFeatError, InvalidArgumentError, NonFiniteError, TrainingError
from src.data.dataset import SceneRecord, build_vocabulary, load_split
from src.data.questions import majority_baseline
from src.detector.pretrain import PretrainSample, pretrain
from src.models.box import GroundTruth
from src.models.feature_set import FeatureSet
from src.schemas.backbone import STAGE_NAMES
from src.schemas.bench import SweepRow
from src.schemas.run import RunConfig
from src.schemas.vqa import Schedule, VqaConfig
from src.utils.feature_cache import cache_path, load_cache, save_cache
from src.utils.io import write_json
from src.utils.progress import progress
from src.utils.weights import load_weights, save_weights
from src.vqa.e2e import train_e2e
from src.vqa.model import build_vqa
from src.vqa.train import evaluate_vqa, train_vqa, vqa_examples

logger = logging.getLogger(__name__)

MIN_SWEEP_SIZE = 64


def backbone_weights(params: dict) -> dict:
    return {name: value for name, value in params.items() if name.split(".")[0] in STAGE_NAMES}


class Experiment:
    """Dataset, cached pretraining and VQA fitting shared by the sweeps."""

    def __init__(self, config: RunConfig, data_root: str | Path, work_dir: str | Path, verbose: bool = False):
        self.config = config
        self.data_root = Path(data_root)
        self.work_dir = Path(work_dir)
        self.verbose = verbose
        self._records: dict[str, list[SceneRecord]] = {}
        self._images: dict[str, np.ndarray] = {}

    def records(self, split: str) -> list[SceneRecord]:
        if split not in self._records:
            self._records[split] = load_split(self.data_root, split)
        return self._records[split]

    def image(self, record: SceneRecord) -> np.ndarray:
        if record.image_id not in self._images:
            self._images[record.image_id] = record.load_image()
        return self._images[record.image_id]

    @cached_property
    def vocab(self):
        return build_vocabulary(self.records("train"))

    def examples(self, split: str):
        return vqa_examples(self.records(split), self.vocab)

    def pretrain_samples(self) -> list[PretrainSample]:
        samples = []
        for record in self.records("train"):
            tensor, scale = prepare_image(self.image(record), self.config)
            gt = record.ground_truth
            samples.append(PretrainSample(tensor, GroundTruth(gt.boxes * scale, gt.class_ids, gt.attribute_ids)))
        return samples

    def pretrained(self, mode: str, attr_weight: float, seed: int) -> dict:
        """Pretrained weights for one (mode, attribute weight, seed), loaded from the cache when present."""
        path = self.work_dir / "pretrain" / f"{mode}_{attr_weight:g}_{seed}.gfwt"
        if path.exists():
            logger.info(f"Loading cached pretrained weights {path}")
            return load_weights(path)
        detector = self.config.detector.model_copy(update={"attr_weight": attr_weight})
        schedule = Schedule.preset("detector_1x").scaled(
            self.config.bench.pretrain_iterations, self.config.bench.pretrain_batch_size
        )
        result = pretrain(self.pretrain_samples(), mode, self.config.backbone, detector, schedule, seed=seed,
                          verbose=self.verbose)
        save_weights(result.params, path)
        return result.params

    def detector_weights(self, seed: int) -> dict:
        return self.pretrained("detection_attributes", self.config.detector.attr_weight, seed)

    def features(self, kind: str, params: dict, split: str, n: int | None = None,
                 size: tuple[int, int] | None = None, cache_dir: str | Path | None = None) -> dict[str, FeatureSet]:
        """
        FeatureSets of one split keyed by image id.

        With ``cache_dir`` every set is read from its GFVQ file when present
        and written there after extraction otherwise.
        """
        out = {}
        for record in progress(self.records(split), self.verbose, desc=f"extract {split}"):
            path = cache_path(cache_dir, split, record.image_id) if cache_dir is not None else None
            if path is not None and path.exists():
                out[record.image_id] = load_cache(path)
                continue
            tensor, _ = prepare_image(self.image(record), self.config, size)
            out[record.image_id] = extract_features(tensor, kind, params, self.config, n)
            if path is not None:
                save_cache(out[record.image_id], path)
        return out

    def fit_and_score(self, train: dict[str, FeatureSet], test: dict[str, FeatureSet], seed: int,
                      vqa: VqaConfig | None = None) -> float:
        """Train a fresh VQA head on ``train`` features and return test accuracy."""
        vqa = vqa or self.config.vqa
        bench = self.config.bench
        dim = next(iter(train.values())).dim
        params = build_vqa(len(self.vocab.tokens), len(self.vocab.answers), dim, vqa, seed)
        schedule = vqa.schedule.scaled(bench.vqa_iterations, bench.vqa_batch_size)
        result = train_vqa(params, self.examples("train"), train, vqa, schedule, seed=seed, verbose=self.verbose)
        return evaluate_vqa(result.params, self.examples("test"), test, vqa)["accuracy"]


def run_cell(log: SweepLog, sweep: str, value: str, pipeline: str, seed: int,
             compute: Callable[[], SweepRow]) -> None:
    """Compute and record one cell unless the log already has it; failures become rows."""
    if log.done(sweep, value, pipeline, seed):
        return
    try:
        row = compute()
    except (TrainingError, NonFiniteError) as e:
        logger.warning(f"{sweep}={value} ({pipeline}, seed {seed}) diverged: {e.detail}")
        row = SweepRow(sweep=sweep, value=value, pipeline=pipeline, seed=seed, num_features=0,
                       status="diverged", detail=e.detail)
    except GridFeatError as e:
        logger.warning(f"{sweep}={value} ({pipeline}, seed {seed}) failed: {e.detail}")
        row = SweepRow(sweep=sweep, value=value, pipeline=pipeline, seed=seed, num_features=0,
                       status="failed", detail=e.detail)
    log.add(row)


def truncated(features: dict[str, FeatureSet], n: int) -> dict[str, FeatureSet]:
    return {key: fs.truncate_or_pad(n) for key, fs in features.items()}


def sweep_num_features(exp: Experiment, log: SweepLog) -> None:
    """Region accuracy per N (features extracted once at the largest N) plus grid at its natural N."""
    counts = exp.config.bench.num_features
    if any(n < 1 for n in counts):
        raise InvalidArgumentError(f"feature counts must be >= 1, got {counts}")
    for seed in exp.config.bench.seeds:
        todo = [n for n in counts if not log.done("num_features", str(n), "region", seed)]
        grid_todo = not log.done("num_features", "grid", "grid", seed)
        if not todo and not grid_todo:
            continue
        params = exp.detector_weights(seed)
        if todo:
            train = exp.features("region", params, "train", n=max(todo))
            test = exp.features("region", params, "test", n=max(todo))
            for n in todo:
                run_cell(log, "num_features", str(n), "region", seed, lambda n=n: SweepRow(
                    sweep="num_features", value=str(n), pipeline="region", seed=seed, num_features=n,
                    accuracy=exp.fit_and_score(truncated(train, n), truncated(test, n), seed),
                ))

        def grid_row():
            train = exp.features("grid", params, "train")
            test = exp.features("grid", params, "test")
            n = next(iter(test.values())).num_features
            return SweepRow(sweep="num_features", value="grid", pipeline="grid", seed=seed, num_features=n,
                            accuracy=exp.fit_and_score(train, test, seed))

        run_cell(log, "num_features", "grid", "grid", seed, grid_row)


def sweep_input_size(exp: Experiment, log: SweepLog) -> None:
    """Grid accuracy per fixed input size; N follows the grid-count formula."""
    sizes = exp.config.bench.input_sizes
    if any(min(size) < MIN_SWEEP_SIZE for size in sizes):
        raise InvalidArgumentError(f"input sizes must be >= {MIN_SWEEP_SIZE}, got {sizes}")
    for seed in exp.config.bench.seeds:
        for height, width in sizes:
            value = f"{height}x{width}"

            def row(height=height, width=width, value=value):
                params = exp.detector_weights(seed)
                train = exp.features("grid", params, "train", size=(height, width))
                test = exp.features("grid", params, "test", size=(height, width))
                return SweepRow(sweep="input_size", value=value, pipeline="grid", seed=seed,
                                num_features=grid_count(height, width), accuracy=exp.fit_and_score(train, test, seed))

            run_cell(log, "input_size", value, "grid", seed, row)


def pretrain_cells(exp: Experiment) -> list[tuple[str, float]]:
    cells = []
    for mode in exp.config.bench.pretrain_modes:
        if mode in ("classification", "detection"):
            cells.append((mode, 0.0))
        else:
            cells.extend((mode, w) for w in exp.config.bench.attr_weights if w > 0)
    return cells


def sweep_pretrain_proxy(exp: Experiment, log: SweepLog) -> None:
    """Pretrain under each supervision, freeze, train the VQA head on grid features."""
    for seed in exp.config.bench.seeds:
        for mode, weight in pretrain_cells(exp):
            value = mode if mode == "classification" else f"{mode}@{weight:g}"

            def row(mode=mode, weight=weight, value=value):
                params = backbone_weights(exp.pretrained(mode, weight, seed))
                train = exp.features("grid", params, "train")
                test = exp.features("grid", params, "test")
                n = next(iter(test.values())).num_features
                return SweepRow(sweep="pretrain_proxy", value=value, pipeline="grid", seed=seed, num_features=n,
                                accuracy=exp.fit_and_score(train, test, seed), detail=f"attr_weight={weight:g}")

            run_cell(log, "pretrain_proxy", value, "grid", seed, row)


def sweep_classes(exp: Experiment, log: SweepLog) -> None:
    """Region-stage time at fixed N for each class count (untrained weights, no data needed)."""
    bench = exp.config.bench
    seed = exp.config.seed
    rng = np.random.default_rng(seed)
    image = rng.standard_normal((3, bench.image_height, bench.image_width)).astype(np.float32)
    for num_classes in bench.class_counts:
        def row(num_classes=num_classes):
            config = exp.config.model_copy(update={
                "detector": exp.config.detector.model_copy(update={"num_classes": num_classes}),
            })
            params, vqa_params = random_weights("region", config, seed)
            timings = time_pipeline("region", params, vqa_params, [image], config)
            return SweepRow(sweep="classes", value=str(num_classes), pipeline="region", seed=seed,
                            num_features=timings.num_features,
                            region_ms=timings.region_feat_ms + timings.region_select_ms, total_ms=timings.total_ms)

        run_cell(log, "classes", str(num_classes), "region", seed, row)


def sweep_parity(exp: Experiment, log: SweepLog) -> None:
    """Region vs grid accuracy from the same pretrained backbone, plus the majority baseline."""
    for seed in exp.config.bench.seeds:
        def region_row():
            params = exp.detector_weights(seed)
            train = exp.features("region", params, "train")
            test = exp.features("region", params, "test")
            return SweepRow(sweep="parity", value=exp.config.detector.head.mode, pipeline="region", seed=seed,
                            num_features=exp.config.detector.num_regions, accuracy=exp.fit_and_score(train, test, seed))

        def grid_row():
            params = exp.detector_weights(seed)
            train = exp.features("grid", params, "train")
            test = exp.features("grid", params, "test")
            n = next(iter(test.values())).num_features
            return SweepRow(sweep="parity", value="c5", pipeline="grid", seed=seed, num_features=n,
                            accuracy=exp.fit_and_score(train, test, seed))

        run_cell(log, "parity", exp.config.detector.head.mode, "region", seed, region_row)
        run_cell(log, "parity", "c5", "grid", seed, grid_row)

    def baseline_row():
        train = [q for r in exp.records("train") for q in r.questions]
        test = [q for r in exp.records("test") for q in r.questions]
        return SweepRow(sweep="parity", value="majority", pipeline="baseline", seed=exp.config.seed,
                        num_features=0, accuracy=majority_baseline(train, test))

    run_cell(log, "parity", "majority", "baseline", exp.config.seed, baseline_row)


def with_ppm(vqa: VqaConfig, enabled: bool) -> VqaConfig:
    return vqa.model_copy(update={"ppm": vqa.ppm.model_copy(update={"enabled": enabled})})


def sweep_e2e(exp: Experiment, log: SweepLog) -> None:
    """Frozen grid features vs end-to-end fine-tuning, each with and without PPM."""
    bench = exp.config.bench
    for seed in bench.seeds:
        for ppm_enabled in (False, True):
            vqa = with_ppm(exp.config.vqa, ppm_enabled)
            suffix = "+ppm" if ppm_enabled else ""

            def frozen_row(vqa=vqa, suffix=suffix):
                params = backbone_weights(exp.detector_weights(seed))
                train = exp.features("grid", params, "train")
                test = exp.features("grid", params, "test")
                n = next(iter(test.values())).num_features
                return SweepRow(sweep="e2e", value=f"frozen{suffix}", pipeline="grid", seed=seed, num_features=n,
                                accuracy=exp.fit_and_score(train, test, seed, vqa))

            def e2e_row(vqa=vqa, suffix=suffix):
                backbone = backbone_weights(exp.detector_weights(seed))
                head = build_vqa(len(exp.vocab.tokens), len(exp.vocab.answers), exp.config.backbone.c5_channels,
                                 vqa, seed)
                data = exp.config.data
                images = {
                    record.image_id: resize_shortest(exp.image(record), data.resize_short, data.resize_long)[0]
                    for record in exp.records("train")
                }
                schedule = Schedule.preset("e2e").scaled(bench.e2e_iterations, bench.e2e_batch_size)
                result = train_e2e({**backbone, **head}, exp.examples("train"), images, exp.config.backbone, vqa,
                                   schedule, policy=exp.config.data.augment, seed=seed, verbose=exp.verbose)
                test = exp.features("grid", backbone_weights(result.params), "test")
                n = next(iter(test.values())).num_features
                accuracy = evaluate_vqa(result.params, exp.examples("test"), test, vqa)["accuracy"]
                return SweepRow(sweep="e2e", value=f"e2e{suffix}", pipeline="grid", seed=seed, num_features=n,
                                accuracy=accuracy)

            run_cell(log, "e2e", f"frozen{suffix}", "grid", seed, frozen_row)
            run_cell(log, "e2e", f"e2e{suffix}", "grid", seed, e2e_row)


SWEEPS: dict[str, Callable[[Experiment, SweepLog], None]] = {
    "num_features": sweep_num_features,
    "input_size": sweep_input_size,
    "pretrain_proxy": sweep_pretrain_proxy,
    "classes": sweep_classes,
    "parity": sweep_parity,
    "e2e": sweep_e2e,
}


def run_sweep(kind: str, config: RunConfig, data_root: str | Path, out_csv: str | Path, work_dir: str | Path,
              verbose: bool = False) -> list[SweepRow]:
    """
    Run (or resume) one sweep and return every row in its CSV.

    Raises:
        InvalidArgumentError: For an unknown sweep kind or invalid sweep values.
    """
    if kind not in SWEEPS:
        raise InvalidArgumentError(f"unknown sweep {kind!r}; choose from {sorted(SWEEPS)}")
    log = SweepLog(out_csv)
    exp = Experiment(config, data_root, work_dir, verbose=verbose)
    write_json(Path(work_dir) / f"{kind}.config.json", config.model_dump(mode="json"))
    SWEEPS[kind](exp, log)
    logger.info(f"Sweep {kind}: {len(log.rows)} rows in {log.path}")
    return log.rows
