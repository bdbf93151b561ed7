import math

import numpy as np

from src.core.errors import InvalidArgumentError, ShapeError
from src.models.feature_set import FeatureSet


def _pixel_span(low: float, high: float, limit: int) -> tuple[int, int]:
    # pixels whose centers lie inside [low, high]
    start = max(math.ceil(low - 0.5), 0)
    stop = min(math.floor(high - 0.5) + 1, limit)
    return start, stop


def render_attention_map(attention, features: FeatureSet, image_size: tuple[int, int] | None = None) -> np.ndarray:
    """
    Project per-row attention back onto image pixels.

    Every pixel averages the attention of the region boxes / grid cells that
    cover it (uncovered pixels are 0); the raw map is then min-max normalized
    to [0, 1]. A constant raw map becomes 0.5 everywhere.

    Args:
        attention: N weights, aligned with the rows of ``features``.
        features (FeatureSet): Supplies the geometry (boxes or grid cells).
        image_size: (H, W) of the output; defaults to the set's image size.
            Boxes are scaled from the set's image size to this one.

    Returns:
        np.ndarray: HxW float64 heatmap in [0, 1].

    Raises:
        ShapeError: If attention and rows disagree.
        InvalidArgumentError: If a real row has zero-area geometry.
    """
    attention = np.asarray(attention, dtype=np.float64).reshape(-1)
    if len(attention) != features.num_features:
        raise ShapeError(f"{len(attention)} attention weights for {features.num_features} rows")
    height, width = image_size or features.image_size
    scale_y, scale_x = height / features.image_size[0], width / features.image_size[1]
    total = np.zeros((height, width))
    count = np.zeros((height, width))
    for weight, box, real in zip(attention, features.cell_boxes(), features.mask):
        if not real:
            continue
        x1, y1, x2, y2 = box
        if x2 <= x1 or y2 <= y1:
            raise InvalidArgumentError(f"cannot render attention over zero-area geometry {box}")
        r0, r1 = _pixel_span(y1 * scale_y, y2 * scale_y, height)
        c0, c1 = _pixel_span(x1 * scale_x, x2 * scale_x, width)
        total[r0:r1, c0:c1] += weight
        count[r0:r1, c0:c1] += 1
    raw = np.divide(total, count, out=np.zeros_like(total), where=count > 0)
    low, high = raw.min(), raw.max()
    if high - low <= 0:
        return np.full_like(raw, 0.5)
    return (raw - low) / (high - low)
