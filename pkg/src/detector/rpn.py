from dataclasses import dataclass
import logging

import numpy as np

from src.detector.anchors import generate_anchors
from src.detector.boxes import decode_deltas
from src.detector.nms import nms
from src.kernels import ConvSpec, NO_GRAD, sigmoid, value_of
from src.schemas.detector import RpnConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Proposals:
    boxes: np.ndarray
    scores: np.ndarray

    def __len__(self) -> int:
        return len(self.boxes)


def build_rpn(in_channels: int, config: RpnConfig, seed: int) -> dict[str, np.ndarray]:
    """3x3 conv + ReLU, then 1x1 objectness (A) and box-delta (4A) convs; std 0.01 init."""
    rng = np.random.default_rng(seed)
    a = config.num_anchors
    return {
        "rpn.conv.weight": (rng.standard_normal((config.channels, in_channels, 3, 3)) * 0.01).astype(np.float32),
        "rpn.conv.bias": np.zeros(config.channels, np.float32),
        "rpn.cls.weight": (rng.standard_normal((a, config.channels, 1, 1)) * 0.01).astype(np.float32),
        "rpn.cls.bias": np.zeros(a, np.float32),
        "rpn.bbox.weight": (rng.standard_normal((4 * a, config.channels, 1, 1)) * 0.01).astype(np.float32),
        "rpn.bbox.bias": np.zeros(4 * a, np.float32),
    }


def rpn_head(t, params: dict, feature_map):
    """
    Objectness logits (H*W*A) and deltas (H*W*A x 4) for a CxHxW map.

    Rows are ordered (y, x, anchor), the same order ``generate_anchors`` uses.
    """
    hidden = t.op("conv2d", feature_map, params["rpn.conv.weight"], params["rpn.conv.bias"], spec=ConvSpec(padding=1))
    hidden = t.op("relu", hidden)
    logits = t.op("conv2d", hidden, params["rpn.cls.weight"], params["rpn.cls.bias"])
    deltas = t.op("conv2d", hidden, params["rpn.bbox.weight"], params["rpn.bbox.bias"])
    a, height, width = value_of(logits).shape
    logits = t.op("reshape", t.op("transpose", logits, axes=(1, 2, 0)), shape=(-1,))
    deltas = t.op("reshape", deltas, shape=(a, 4, height, width))
    deltas = t.op("reshape", t.op("transpose", deltas, axes=(2, 3, 0, 1)), shape=(-1, 4))
    return logits, deltas


def filter_proposals(anchors: np.ndarray, logits: np.ndarray, deltas: np.ndarray, config: RpnConfig,
                     image_size: tuple[int, int]) -> Proposals:
    """Top-k by objectness, decode + clip, drop empty boxes, NMS, truncate."""
    scores = sigmoid(logits)
    order = np.argsort(-scores, kind="stable")[:config.pre_nms_topk]
    order = order[scores[order] >= config.score_thresh]
    boxes = decode_deltas(anchors[order], deltas[order], image_size)
    scores = scores[order]
    valid = (boxes[:, 2] > boxes[:, 0]) & (boxes[:, 3] > boxes[:, 1])
    boxes, scores = boxes[valid], scores[valid]
    keep = nms(boxes, scores, config.nms_iou)[:config.post_nms_topk]
    return Proposals(boxes[keep], scores[keep])


def rpn_propose(feature_map: np.ndarray, params: dict, config: RpnConfig, image_size: tuple[int, int],
                stride: int = 16) -> Proposals:
    """
    Region proposals for one image.

    Args:
        feature_map (np.ndarray): The shared CxHxW map (stride 16).
        params (dict): Weights holding the ``rpn.*`` tensors.
        config (RpnConfig): Anchors and filtering thresholds.
        image_size (tuple[int, int]): (H, W) of the network input, for clipping.
        stride (int): Pixels per feature cell.

    Returns:
        Proposals: Boxes inside the image with objectness, best first (may be empty).
    """
    logits, deltas = rpn_head(NO_GRAD, params, feature_map)
    height, width = feature_map.shape[-2:]
    anchors = generate_anchors(height, width, stride, config.anchor_scales, config.anchor_ratios)
    proposals = filter_proposals(anchors, logits, deltas, config, image_size)
    logger.debug(f"RPN kept {len(proposals)} of {len(anchors)} anchors")
    return proposals
