"""
The two feature pipelines, split into the stages the benchmark times.

region: shared conv (C4, or dilated C5) | region feature computation (RPN +
per-region head) | region selection (per-class NMS + top N) | VQA
grid:   shared conv (C4 + standard C5)  | VQA
"""
import logging

import numpy as np

from src.backbone.preprocess import resize_fixed, resize_shortest, to_tensor
from src.backbone.resnet import build_backbone, grid_features
from src.core.errors import InvalidArgumentError
from src.detector.heads import feature_dim
from src.detector.model import build_detector, extract_regions, region_candidates, select_regions, shared_map
from src.models.feature_set import FeatureSet
from src.schemas.bench import PipelineKind
from src.schemas.run import RunConfig
from src.vqa.model import build_vqa

logger = logging.getLogger(__name__)

TIMING_VOCAB_SIZE = 32
TIMING_NUM_ANSWERS = 16


def prepare_image(image: np.ndarray, config: RunConfig, size: tuple[int, int] | None = None) -> tuple[np.ndarray, float]:
    """
    HxWx3 uint8 -> normalized 3xHxW network input and the applied scale.

    Without ``size`` the aspect-preserving short/long rule of the data config
    applies; with it the image is stretched to exactly (H, W) and the scale
    is that of the height.
    """
    if size is not None:
        return to_tensor(resize_fixed(image, size)), size[0] / image.shape[0]
    resized, scale = resize_shortest(image, config.data.resize_short, config.data.resize_long)
    return to_tensor(resized), scale


def grid_feature_set(image: np.ndarray, params: dict, config: RunConfig) -> FeatureSet:
    """Grid features of a normalized image: the standard C5 map, row-major."""
    c5 = grid_features(image, params, config.backbone)
    return FeatureSet.from_grid(c5, config.backbone.c5_stride("standard"), tuple(image.shape[-2:]))


def extract_features(image: np.ndarray, kind: PipelineKind, params: dict, config: RunConfig,
                     n: int | None = None) -> FeatureSet:
    """
    FeatureSet of one normalized 3xHxW image.

    Args:
        image (np.ndarray): Network input from ``prepare_image``.
        kind (PipelineKind): "region" needs detector weights, "grid" only the backbone.
        params (dict): Weights.
        config (RunConfig): Backbone and detector configuration.
        n (int | None): Region rows; defaults to ``detector.num_regions``.
    """
    if kind == "grid":
        return grid_feature_set(image, params, config)
    if kind == "region":
        return extract_regions(image, params, config.backbone, config.detector, n)[0]
    raise InvalidArgumentError(f"unknown pipeline {kind!r}")


def pipeline_feature_dim(kind: PipelineKind, config: RunConfig) -> int:
    return config.backbone.c5_channels if kind == "grid" else feature_dim(config.backbone, config.detector)


def random_weights(kind: PipelineKind, config: RunConfig, seed: int) -> tuple[dict, dict]:
    """Untrained (visual, VQA) weights; timing does not depend on their values."""
    visual = build_detector(config.backbone, config.detector, seed) if kind == "region" \
        else build_backbone(config.backbone, seed)
    vqa = build_vqa(TIMING_VOCAB_SIZE, TIMING_NUM_ANSWERS, pipeline_feature_dim(kind, config), config.vqa, seed + 1)
    return visual, vqa


def shared_stage(kind: PipelineKind, image: np.ndarray, params: dict, config: RunConfig):
    if kind == "grid":
        return grid_features(image, params, config.backbone)
    return shared_map(image, params, config.backbone, config.detector)


def region_feature_stage(feature_map, image: np.ndarray, params: dict, config: RunConfig):
    return region_candidates(feature_map, params, config.backbone, config.detector, tuple(image.shape[-2:]))


def region_select_stage(candidates, image: np.ndarray, config: RunConfig, n: int | None = None) -> FeatureSet:
    selection = select_regions(candidates, config.detector, n)
    return selection.feature_set(candidates.vectors, candidates.boxes, tuple(image.shape[-2:]))
