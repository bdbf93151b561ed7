"""
Slow reference implementations the fast kernels are checked against.

They are written as plain loops on purpose of being obviously correct, and
share no code with the kernels they check.
"""
import math

import numpy as np


def naive_conv2d(x: np.ndarray, weight: np.ndarray, bias: np.ndarray | None, stride: int = 1,
                 padding: int = 0, dilation: int = 1) -> np.ndarray:
    """Six nested loops over (out channel, out row, out col, in channel, tap row, tap col) for a CxHxW input."""
    channels, height, width = x.shape
    out_channels, _, kh, kw = weight.shape
    oh = (height + 2 * padding - dilation * (kh - 1) - 1) // stride + 1
    ow = (width + 2 * padding - dilation * (kw - 1) - 1) // stride + 1
    out = np.zeros((out_channels, oh, ow), dtype=np.float64)
    for o in range(out_channels):
        for i in range(oh):
            for j in range(ow):
                total = 0.0 if bias is None else float(bias[o])
                for c in range(channels):
                    for p in range(kh):
                        for q in range(kw):
                            r = i * stride + p * dilation - padding
                            s = j * stride + q * dilation - padding
                            if 0 <= r < height and 0 <= s < width:
                                total += float(x[c, r, s]) * float(weight[o, c, p, q])
                out[o, i, j] = total
    return out


def zero_inserted_kernel(weight: np.ndarray, dilation: int) -> np.ndarray:
    """Spread the taps of an OxCxKxK kernel ``dilation`` apart, zeros in between."""
    out_channels, channels, kh, kw = weight.shape
    dilated = np.zeros((out_channels, channels, (kh - 1) * dilation + 1, (kw - 1) * dilation + 1), dtype=weight.dtype)
    dilated[:, :, ::dilation, ::dilation] = weight
    return dilated


def box_iou(a, b) -> float:
    iw = max(0.0, min(a[2], b[2]) - max(a[0], b[0]))
    ih = max(0.0, min(a[3], b[3]) - max(a[1], b[1]))
    inter = iw * ih
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return inter / union if union > 0 else 0.0


def brute_force_nms(boxes, scores, iou_thresh: float) -> list[int]:
    """O(n^2) greedy NMS: each candidate, best first, checked against every kept box."""
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    kept: list[int] = []
    for i in order:
        if all(box_iou(boxes[i], boxes[k]) <= iou_thresh for k in kept):
            kept.append(i)
    return kept


def bin_scan_roi_pool(feature_map: np.ndarray, box, output_size: int, stride: float) -> np.ndarray:
    """
    RoIPool by visiting every feature cell and testing which bins contain it.

    Bins follow the RoIPool quantization: the box is rounded onto the feature
    grid, its inclusive extent split into k equal parts, bin edges floored /
    ceiled.
    """
    depth, height, width = feature_map.shape
    x1, y1, x2, y2 = (float(v) for v in box)
    start_w, start_h = math.floor(x1 / stride + 0.5), math.floor(y1 / stride + 0.5)
    end_w, end_h = math.floor(x2 / stride + 0.5), math.floor(y2 / stride + 0.5)
    bin_h = max(end_h - start_h + 1, 1) / output_size
    bin_w = max(end_w - start_w + 1, 1) / output_size
    out = np.zeros((depth, output_size, output_size), dtype=np.float64)
    for i in range(output_size):
        for j in range(output_size):
            top, bottom = math.floor(i * bin_h) + start_h, math.ceil((i + 1) * bin_h) + start_h
            left, right = math.floor(j * bin_w) + start_w, math.ceil((j + 1) * bin_w) + start_w
            found = False
            best = np.full(depth, -np.inf)
            for r in range(height):
                for s in range(width):
                    if top <= r < bottom and left <= s < right:
                        best = np.maximum(best, feature_map[:, r, s])
                        found = True
            if found:
                out[:, i, j] = best
    return out


def random_boxes(rng: np.random.Generator, count: int, extent: float = 100.0, min_size: float = 1.0) -> np.ndarray:
    corners = rng.uniform(0, extent, size=(count, 2))
    sizes = rng.uniform(min_size, extent / 2, size=(count, 2))
    return np.concatenate([corners, corners + sizes], axis=1)
