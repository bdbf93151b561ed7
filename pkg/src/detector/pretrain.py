"""
Backbone pretraining for the three pretraining proxies.

``classification`` trains backbone + a global-pool classifier with multi-label
BCE over the classes present in each image and never reads boxes;
``detection`` trains the full detector with the attribute weight at 0;
``detection_attributes`` adds the attribute term with ``attr_weight``.
"""
from dataclasses import dataclass
import logging
from typing import Literal

import numpy as np

from src.backbone.resnet import build_backbone, build_classifier, classification_logits, grid_features
from src.core.errors import LabelError, TrainingError
from src.detector.anchors import generate_anchors
from src.detector.heads import region_features
from src.detector.losses import detector_loss, head_terms, rpn_terms
from src.detector.model import SHARED_STRIDE, build_detector, seeds_for, shared_map
from src.detector.rpn import filter_proposals, rpn_head
from src.detector.targets import assign_anchor_targets, assign_roi_targets
from src.kernels import value_of
from src.models.box import GroundTruth
from src.schemas.backbone import BackboneConfig
from src.schemas.detector import DetectorConfig
from src.schemas.vqa import Schedule
from src.vqa.train import TrainResult, batch_sampler, run_training

logger = logging.getLogger(__name__)

PretrainMode = Literal["classification", "detection", "detection_attributes"]
PRETRAIN_MODES: tuple[str, ...] = ("classification", "detection", "detection_attributes")


@dataclass(frozen=True, eq=False)
class PretrainSample:
    image: np.ndarray        # normalized 3xHxW
    ground_truth: GroundTruth


def class_targets(ground_truth: GroundTruth, num_classes: int) -> np.ndarray:
    """Multi-hot vector of the classes present in an image."""
    ids = np.asarray(ground_truth.class_ids, dtype=np.int64)
    if np.any(ids < 0) or np.any(ids >= num_classes):
        raise LabelError(f"class ids must lie in [0, {num_classes})")
    targets = np.zeros(num_classes)
    targets[ids] = 1.0
    return targets


def image_detector_loss(t, params: dict, image, gt: GroundTruth, backbone: BackboneConfig,
                        detector: DetectorConfig, attr_weight: float, rng: np.random.Generator):
    """Full five-term detector loss for one image; returns a DetectorLoss."""
    image_size = tuple(np.shape(image)[-2:])
    feature_map = shared_map(image, params, backbone, detector, t=t)
    height, width = value_of(feature_map).shape[-2:]
    anchors = generate_anchors(height, width, SHARED_STRIDE, detector.rpn.anchor_scales, detector.rpn.anchor_ratios)
    objectness, deltas = rpn_head(t, params, feature_map)
    proposals = filter_proposals(anchors, value_of(objectness), value_of(deltas), detector.rpn, image_size)
    anchor_targets = assign_anchor_targets(anchors, gt, detector.rpn, rng)
    roi_targets = assign_roi_targets(proposals.boxes, gt, detector.head, rng)
    outputs = region_features(roi_targets.rois, feature_map, params, backbone, detector, stride=SHARED_STRIDE, t=t)
    return detector_loss(
        t,
        rpn_terms(t, objectness, deltas, anchor_targets),
        head_terms(t, outputs, roi_targets),
        attr_weight,
    )


def build_pretrain_params(mode: PretrainMode, backbone: BackboneConfig, detector: DetectorConfig,
                          seed: int) -> dict[str, np.ndarray]:
    if mode == "classification":
        backbone_seed, head_seed = seeds_for(seed, 2)
        return {**build_backbone(backbone, backbone_seed), **build_classifier(backbone, detector.num_classes, head_seed)}
    return build_detector(backbone, detector, seed)


def pretrain(samples: list[PretrainSample], mode: PretrainMode, backbone: BackboneConfig, detector: DetectorConfig,
             schedule: Schedule, seed: int = 0, params: dict | None = None, verbose: bool = False) -> TrainResult:
    """
    Pretrain a backbone (and, for the detection modes, the RPN and region head).

    Args:
        samples (list[PretrainSample]): Normalized images with ground truth.
            Classification batches are stacked, so images must share a size.
        mode (PretrainMode): Which pretraining proxy to run.
        backbone (BackboneConfig): Backbone layout.
        detector (DetectorConfig): Class/attribute counts, head mode, attr_weight.
        schedule (Schedule): Usually ``detector_1x`` scaled to the toy budget.
        seed (int): Seeds initialization, batch order and target sampling.
        params (dict | None): Start from these weights instead of a fresh init.

    Returns:
        TrainResult: The trained weights and the loss log.

    Raises:
        TrainingError: On an unknown mode, empty data or a diverging loss.
    """
    if mode not in PRETRAIN_MODES:
        raise TrainingError(f"unknown pretraining mode {mode!r}; choose from {list(PRETRAIN_MODES)}")
    if not samples:
        raise TrainingError("cannot pretrain on an empty dataset")
    init_seed, order_seed, target_seed = seeds_for(seed, 3)
    params = params if params is not None else build_pretrain_params(mode, backbone, detector, init_seed)
    sample = batch_sampler(len(samples), schedule.batch_size, order_seed)
    rng = np.random.default_rng(target_seed)

    def next_batch(iteration: int) -> list[PretrainSample]:
        return [samples[i] for i in sample(iteration)]

    if mode == "classification":
        def loss_fn(tape, leaves, batch):
            images = np.stack([s.image for s in batch])
            targets = np.stack([class_targets(s.ground_truth, detector.num_classes) for s in batch])
            logits = classification_logits(tape, leaves, grid_features(images, leaves, backbone, t=tape))
            return tape.op("bce_with_logits", logits, targets=targets)
    else:
        attr_weight = detector.attr_weight if mode == "detection_attributes" else 0.0

        def loss_fn(tape, leaves, batch):
            total = None
            for s in batch:
                loss = image_detector_loss(tape, leaves, s.image, s.ground_truth, backbone, detector, attr_weight, rng)
                total = loss.total if total is None else tape.op("add", total, loss.total)
            return tape.op("scale", total, factor=1.0 / len(batch))

    logger.info(f"Pretraining ({mode}) for {schedule.iterations} iterations on {len(samples)} images")
    return run_training(params, loss_fn, next_batch, schedule, verbose=verbose, desc=f"pretrain-{mode}")
