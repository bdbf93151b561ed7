import numpy as np

from src.core.errors import InvalidArgumentError


def cell_anchors(scales, ratios) -> np.ndarray:
    """
    A x 4 anchors centered at the origin, scale-major.

    ``scale`` is sqrt(area) and ``ratio`` is width / height, so an anchor is
    scale * sqrt(ratio) wide and scale / sqrt(ratio) tall.
    """
    if len(scales) == 0 or len(ratios) == 0:
        raise InvalidArgumentError("anchor scales and ratios must be non-empty")
    anchors = []
    for scale in scales:
        for ratio in ratios:
            w = scale * np.sqrt(ratio)
            h = scale / np.sqrt(ratio)
            anchors.append([-0.5 * w, -0.5 * h, 0.5 * w, 0.5 * h])
    return np.asarray(anchors, dtype=np.float64)


def generate_anchors(feat_h: int, feat_w: int, stride: float, scales, ratios) -> np.ndarray:
    """
    Anchors for every cell of a feat_h x feat_w map.

    Cell (y, x) is centered at ((x + 0.5) * stride, (y + 0.5) * stride). Rows
    are ordered (y, x, anchor), matching the RPN output layout.

    Returns:
        np.ndarray: (feat_h * feat_w * A) x 4 boxes.
    """
    if feat_h < 1 or feat_w < 1:
        raise InvalidArgumentError(f"feature extents must be positive, got {feat_h}x{feat_w}")
    base = cell_anchors(scales, ratios)
    ys, xs = np.meshgrid((np.arange(feat_h) + 0.5) * stride, (np.arange(feat_w) + 0.5) * stride, indexing="ij")
    shifts = np.stack([xs, ys, xs, ys], axis=-1).reshape(-1, 1, 4)
    return (shifts + base[None]).reshape(-1, 4)
