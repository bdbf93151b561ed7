"""
Per-region heads on top of the shared map.

``c5_14x14``: 14x14 RoIPool on C4, the res5 stage run on every pooled region,
spatial mean; the region vector has the C5 channel count.
``fc2_1x1``: 1x1 RoIPool on the stride-16 (dilated) C5 map, then two fc_dim
layers with ReLU.
Both feed a classifier over num_classes + 1 logits (index 0 is background), a
class-agnostic box regressor and an attribute branch.
"""
from dataclasses import dataclass

import numpy as np

from src.backbone.resnet import forward_c5
from src.kernels import NO_GRAD, value_of
from src.schemas.backbone import BackboneConfig
from src.schemas.detector import DetectorConfig


@dataclass
class RegionOutputs:
    """Tape values (nodes or arrays) for R regions."""
    features: object
    class_logits: object
    attr_logits: object
    box_deltas: object

    @property
    def num_regions(self) -> int:
        return value_of(self.features).shape[0]


def feature_dim(backbone: BackboneConfig, detector: DetectorConfig) -> int:
    return backbone.c5_channels if detector.head.mode == "c5_14x14" else detector.head.fc_dim


def _dense(rng, out_dim: int, in_dim: int, std: float | None = None) -> np.ndarray:
    std = np.sqrt(2.0 / in_dim) if std is None else std
    return (rng.standard_normal((out_dim, in_dim)) * std).astype(np.float32)


def build_head(backbone: BackboneConfig, detector: DetectorConfig, seed: int) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(seed)
    head = detector.head
    weights: dict[str, np.ndarray] = {}
    if head.mode == "fc2_1x1":
        pooled_dim = backbone.c5_channels * head.pool_size * head.pool_size
        weights["head.fc1.weight"] = _dense(rng, head.fc_dim, pooled_dim)
        weights["head.fc1.bias"] = np.zeros(head.fc_dim, np.float32)
        weights["head.fc2.weight"] = _dense(rng, head.fc_dim, head.fc_dim)
        weights["head.fc2.bias"] = np.zeros(head.fc_dim, np.float32)
    dim = feature_dim(backbone, detector)
    weights["head.cls.weight"] = _dense(rng, detector.num_classes + 1, dim, std=0.01)
    weights["head.cls.bias"] = np.zeros(detector.num_classes + 1, np.float32)
    weights["head.bbox.weight"] = _dense(rng, 4, dim, std=0.001)
    weights["head.bbox.bias"] = np.zeros(4, np.float32)
    weights["head.attr_fc.weight"] = _dense(rng, head.attr_hidden, dim)
    weights["head.attr_fc.bias"] = np.zeros(head.attr_hidden, np.float32)
    weights["head.attr.weight"] = _dense(rng, detector.num_attributes, head.attr_hidden, std=0.01)
    weights["head.attr.bias"] = np.zeros(detector.num_attributes, np.float32)
    return weights


def pooled_vectors(t, params: dict, shared_map, boxes: np.ndarray, backbone: BackboneConfig,
                   detector: DetectorConfig, stride: int = 16):
    """RoIPool + per-region trunk: R x D region vectors."""
    head = detector.head
    pooled = t.op("roi_pool", shared_map, boxes=boxes, output_size=head.pool_size, stride=stride,
                  reduction=head.pool_reduction)
    if head.mode == "c5_14x14":
        c5 = forward_c5(pooled, params, backbone, mode="standard", t=t)
        return t.op("mean", c5, axis=(2, 3))
    flat = t.op("reshape", pooled, shape=(len(boxes), -1))
    hidden = t.op("relu", t.op("linear", flat, params["head.fc1.weight"], params["head.fc1.bias"]))
    return t.op("relu", t.op("linear", hidden, params["head.fc2.weight"], params["head.fc2.bias"]))


def predict(t, params: dict, vectors) -> RegionOutputs:
    class_logits = t.op("linear", vectors, params["head.cls.weight"], params["head.cls.bias"])
    box_deltas = t.op("linear", vectors, params["head.bbox.weight"], params["head.bbox.bias"])
    attr_hidden = t.op("relu", t.op("linear", vectors, params["head.attr_fc.weight"], params["head.attr_fc.bias"]))
    attr_logits = t.op("linear", attr_hidden, params["head.attr.weight"], params["head.attr.bias"])
    return RegionOutputs(vectors, class_logits, attr_logits, box_deltas)


def region_features(boxes, shared_map, params: dict, backbone: BackboneConfig, detector: DetectorConfig,
                    stride: int = 16, t=NO_GRAD) -> RegionOutputs:
    """
    Region vectors plus class, attribute and box-delta predictions for every box.

    Args:
        boxes: R x 4 proposals in input-image pixels.
        shared_map: The DxHxW map the head pools from (C4, or dilated C5).
        params (dict): Backbone and ``head.*`` weights.
        backbone (BackboneConfig): Needed by the c5_14x14 head to run res5.
        detector (DetectorConfig): Head mode and output sizes.
        stride (int): Pixels per shared-map cell.
        t: Tape to run under.

    Returns:
        RegionOutputs: With zero rows when there are no proposals.
    """
    boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 4)
    if len(boxes) == 0:
        dim = feature_dim(backbone, detector)
        return RegionOutputs(
            np.zeros((0, dim), np.float32),
            np.zeros((0, detector.num_classes + 1), np.float32),
            np.zeros((0, detector.num_attributes), np.float32),
            np.zeros((0, 4), np.float32),
        )
    vectors = pooled_vectors(t, params, shared_map, boxes, backbone, detector, stride)
    return predict(t, params, vectors)
