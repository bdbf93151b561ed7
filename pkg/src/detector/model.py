"""
The full bottom-up detector: backbone, RPN and region head over one weight collection.

Inference is split into the stages the benchmark times separately: the
shared map, region feature computation (RPN + head) and region selection.
"""
from dataclasses import dataclass
import logging

import numpy as np

from src.backbone.resnet import build_backbone, forward_c5, forward_to_c4
from src.detector.boxes import decode_deltas
from src.detector.heads import RegionOutputs, build_head, region_features
from src.detector.rpn import Proposals, build_rpn, rpn_propose
from src.detector.selection import RegionSelection, select_top_regions
from src.kernels import NO_GRAD, value_of
from src.kernels.dense import softmax
from src.models.box import Detection
from src.models.feature_set import FeatureSet
from src.schemas.backbone import BackboneConfig
from src.schemas.detector import DetectorConfig

logger = logging.getLogger(__name__)

SHARED_STRIDE = 16


@dataclass
class RegionCandidates:
    """Everything region selection needs for one image."""
    proposals: Proposals
    boxes: np.ndarray
    class_probs: np.ndarray
    attr_probs: np.ndarray
    vectors: np.ndarray


def seeds_for(seed: int, count: int) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(count)]


def build_detector(backbone: BackboneConfig, detector: DetectorConfig, seed: int) -> dict[str, np.ndarray]:
    """Backbone + RPN + head weights; each part seeded from its own child of ``seed``."""
    backbone_seed, rpn_seed, head_seed = seeds_for(seed, 3)
    shared_channels = backbone.c4_channels if detector.head.mode == "c5_14x14" else backbone.c5_channels
    return {
        **build_backbone(backbone, backbone_seed),
        **build_rpn(shared_channels, detector.rpn, rpn_seed),
        **build_head(backbone, detector, head_seed),
    }


def shared_map(image, params: dict, backbone: BackboneConfig, detector: DetectorConfig, t=NO_GRAD):
    """
    The stride-16 map shared by every region: C4 for the c5_14x14 head, the
    dilated C5 map for the fc2_1x1 head.
    """
    c4 = forward_to_c4(image, params, backbone, t=t)
    if detector.head.mode == "c5_14x14":
        return c4
    return forward_c5(c4, params, backbone, mode="dilated", t=t)


def region_candidates(feature_map: np.ndarray, params: dict, backbone: BackboneConfig, detector: DetectorConfig,
                      image_size: tuple[int, int]) -> RegionCandidates:
    """Proposals, head outputs and regressed boxes: the region feature computation stage."""
    proposals = rpn_propose(feature_map, params, detector.rpn, image_size, stride=SHARED_STRIDE)
    outputs: RegionOutputs = region_features(proposals.boxes, feature_map, params, backbone, detector,
                                             stride=SHARED_STRIDE)
    if len(proposals):
        boxes = decode_deltas(proposals.boxes, value_of(outputs.box_deltas), image_size)
        class_probs = softmax(np.asarray(value_of(outputs.class_logits), dtype=np.float64), axis=1)
        attr_probs = softmax(np.asarray(value_of(outputs.attr_logits), dtype=np.float64), axis=1)
    else:
        boxes = np.zeros((0, 4))
        class_probs = np.zeros((0, detector.num_classes + 1))
        attr_probs = np.zeros((0, detector.num_attributes))
    return RegionCandidates(proposals, boxes, class_probs, attr_probs, np.asarray(value_of(outputs.features)))


def select_regions(candidates: RegionCandidates, detector: DetectorConfig, n: int | None = None) -> RegionSelection:
    """Per-class NMS + top-N over foreground classes (background column dropped)."""
    return select_top_regions(
        candidates.boxes,
        candidates.class_probs[:, 1:],
        n or detector.num_regions,
        detector.class_nms_iou,
        detector.select_score_thresh,
    )


def extract_regions(image: np.ndarray, params: dict, backbone: BackboneConfig, detector: DetectorConfig,
                    n: int | None = None) -> tuple[FeatureSet, list[Detection]]:
    """
    Region features of one normalized 3xHxW image.

    Returns:
        tuple[FeatureSet, list[Detection]]: N rows (zero-padded) and the surviving detections.
    """
    image_size = tuple(image.shape[-2:])
    feature_map = shared_map(image, params, backbone, detector)
    candidates = region_candidates(feature_map, params, backbone, detector, image_size)
    selection = select_regions(candidates, detector, n)
    features = selection.feature_set(candidates.vectors, candidates.boxes, image_size)
    detections = selection.detections(candidates.boxes, candidates.attr_probs)
    logger.debug(f"Selected {len(detections)} of {len(candidates.proposals)} proposals")
    return features, detections


def detect(image: np.ndarray, params: dict, backbone: BackboneConfig, detector: DetectorConfig) -> list[Detection]:
    return extract_regions(image, params, backbone, detector)[1]
