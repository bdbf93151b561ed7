"""Windowed max pooling, adaptive average pooling, nearest upsampling and RoIPool."""
import math

import numpy as np

from src.core.errors import InvalidArgumentError, ShapeError
from src.kernels.registry import register
from src.kernels.tensor import check_finite


def _spatial(x: np.ndarray, op_id: str) -> tuple[int, int]:
    if x.ndim not in (3, 4):
        raise ShapeError(f"{op_id} expects CxHxW or NxCxHxW input, got shape {x.shape}")
    return x.shape[-2], x.shape[-1]


# -- max pooling ---------------------------------------------------------------

def _max_pool_windows(x, kernel_size, stride, padding):
    height, width = _spatial(x, "max_pool2d")
    stride = stride or kernel_size
    if padding > kernel_size // 2:
        raise InvalidArgumentError(f"max_pool2d padding {padding} too large for kernel {kernel_size}")
    oh = (height + 2 * padding - kernel_size) // stride + 1
    ow = (width + 2 * padding - kernel_size) // stride + 1
    if oh < 1 or ow < 1:
        raise ShapeError(f"max_pool2d output extent < 1 for input {x.shape}")
    pad = [(0, 0)] * (x.ndim - 2) + [(padding, padding), (padding, padding)]
    padded = np.pad(x, pad, constant_values=-np.inf) if padding else x
    windows = []
    for i in range(kernel_size):
        for j in range(kernel_size):
            windows.append((
                ...,
                slice(i, i + stride * (oh - 1) + 1, stride),
                slice(j, j + stride * (ow - 1) + 1, stride),
            ))
    return padded, windows


def max_pool2d(x: np.ndarray, kernel_size: int, stride: int | None = None, padding: int = 0) -> np.ndarray:
    """Windowed maximum; ties resolve to the first tap in row-major order."""
    padded, windows = _max_pool_windows(x, kernel_size, stride, padding)
    best = padded[windows[0]].copy()
    for window in windows[1:]:
        np.maximum(best, padded[window], out=best)
    return check_finite(best, "max_pool2d")


def _max_pool2d_backward(grad, inputs, output, kernel_size, stride=None, padding=0):
    (x,) = inputs
    padded, windows = _max_pool_windows(x, kernel_size, stride, padding)
    best = padded[windows[0]].copy()
    winner = np.zeros(best.shape, dtype=np.int64)
    for tap, window in enumerate(windows[1:], start=1):
        candidate = padded[window]
        better = candidate > best
        best = np.where(better, candidate, best)
        winner = np.where(better, tap, winner)
    d_padded = np.zeros(padded.shape, dtype=grad.dtype)
    for tap, window in enumerate(windows):
        d_padded[window] += np.where(winner == tap, grad, 0)
    if padding:
        d_padded = d_padded[..., padding:-padding, padding:-padding]
    return (d_padded.astype(x.dtype),)


# -- adaptive average pooling ----------------------------------------------------

def adaptive_bins(size: int, out: int) -> list[tuple[int, int]]:
    """Bin i spans [floor(i*size/out), ceil((i+1)*size/out))."""
    return [(math.floor(i * size / out), math.ceil((i + 1) * size / out)) for i in range(out)]


def adaptive_avg_pool2d(x: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    height, width = _spatial(x, "adaptive_avg_pool2d")
    if not (1 <= out_h <= height and 1 <= out_w <= width):
        raise ShapeError(f"adaptive_avg_pool2d output {out_h}x{out_w} must lie within input {height}x{width}")
    out = np.empty(x.shape[:-2] + (out_h, out_w), dtype=x.dtype)
    for i, (h0, h1) in enumerate(adaptive_bins(height, out_h)):
        for j, (w0, w1) in enumerate(adaptive_bins(width, out_w)):
            out[..., i, j] = x[..., h0:h1, w0:w1].mean(axis=(-2, -1))
    return check_finite(out, "adaptive_avg_pool2d")


def _adaptive_avg_pool2d_backward(grad, inputs, output, out_h, out_w):
    (x,) = inputs
    height, width = x.shape[-2:]
    d_x = np.zeros_like(x)
    for i, (h0, h1) in enumerate(adaptive_bins(height, out_h)):
        for j, (w0, w1) in enumerate(adaptive_bins(width, out_w)):
            area = (h1 - h0) * (w1 - w0)
            d_x[..., h0:h1, w0:w1] += (grad[..., i, j] / area)[..., None, None]
    return (d_x,)


# -- nearest-neighbour upsampling -------------------------------------------------

def _nearest_index(size: int, out: int) -> np.ndarray:
    return (np.arange(out) * size) // out


def upsample_nearest(x: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    height, width = _spatial(x, "upsample_nearest")
    rows = _nearest_index(height, out_h)
    cols = _nearest_index(width, out_w)
    return x[..., rows[:, None], cols[None, :]]


def _upsample_nearest_backward(grad, inputs, output, out_h, out_w):
    (x,) = inputs
    height, width = x.shape[-2:]
    rows = _nearest_index(height, out_h)
    cols = _nearest_index(width, out_w)
    flat = np.zeros((int(np.prod(x.shape[:-2])), height, width), dtype=grad.dtype)
    np.add.at(flat, (slice(None), rows[:, None], cols[None, :]), grad.reshape((-1, out_h, out_w)))
    return (flat.reshape(x.shape).astype(x.dtype),)


# -- RoIPool ------------------------------------------------------------------------

def roi_bins(box, output_size: int, stride: float, height: int, width: int):
    """
    Quantize a pixel-space box onto the feature grid and split it into bins.

    The box is divided by the stride and rounded, its extent counted
    inclusively, and bin (i, j) spans rows [floor(i*bh), ceil((i+1)*bh)) offset
    by the box start, clipped to the map.

    Returns:
        list[tuple[int, int, int, int]]: (h0, h1, w0, w1) per bin, row-major.

    Raises:
        InvalidArgumentError: If the box has non-positive extents or k < 1.
        ShapeError: If the projected box lies fully outside the map.
    """
    x1, y1, x2, y2 = (float(v) for v in box)
    if output_size < 1:
        raise InvalidArgumentError(f"roi_pool output size must be >= 1, got {output_size}")
    if x2 <= x1 or y2 <= y1:
        raise InvalidArgumentError(f"roi_pool box must have positive extents, got {box}")
    start_w = math.floor(x1 / stride + 0.5)
    start_h = math.floor(y1 / stride + 0.5)
    end_w = math.floor(x2 / stride + 0.5)
    end_h = math.floor(y2 / stride + 0.5)
    if start_w >= width or start_h >= height or end_w < 0 or end_h < 0:
        raise ShapeError(f"roi_pool box {box} lies outside the {height}x{width} feature map")
    bin_h = max(end_h - start_h + 1, 1) / output_size
    bin_w = max(end_w - start_w + 1, 1) / output_size
    bins = []
    for i in range(output_size):
        h0 = min(max(math.floor(i * bin_h) + start_h, 0), height)
        h1 = min(max(math.ceil((i + 1) * bin_h) + start_h, 0), height)
        for j in range(output_size):
            w0 = min(max(math.floor(j * bin_w) + start_w, 0), width)
            w1 = min(max(math.ceil((j + 1) * bin_w) + start_w, 0), width)
            bins.append((h0, h1, w0, w1))
    return bins


def roi_pool(feature_map: np.ndarray, boxes, output_size: int, stride: float, reduction: str = "max") -> np.ndarray:
    """
    Pool a k x k patch per box from a DxHxW feature map.

    Args:
        feature_map (np.ndarray): DxHxW map.
        boxes: Rx4 pixel boxes (x1, y1, x2, y2).
        output_size (int): k.
        stride (float): Image pixels per feature cell.
        reduction (str): "max" (RoIPool) or "mean".

    Returns:
        np.ndarray: RxDxkxk; empty bins are 0.
    """
    if feature_map.ndim != 3:
        raise ShapeError(f"roi_pool expects a DxHxW map, got shape {feature_map.shape}")
    if reduction not in ("max", "mean"):
        raise InvalidArgumentError(f"unknown roi_pool reduction {reduction!r}")
    boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 4)
    depth, height, width = feature_map.shape
    out = np.zeros((len(boxes), depth, output_size, output_size), dtype=feature_map.dtype)
    for r, box in enumerate(boxes):
        for b, (h0, h1, w0, w1) in enumerate(roi_bins(box, output_size, stride, height, width)):
            if h1 <= h0 or w1 <= w0:
                continue
            cell = feature_map[:, h0:h1, w0:w1].reshape(depth, -1)
            i, j = divmod(b, output_size)
            out[r, :, i, j] = cell.max(axis=1) if reduction == "max" else cell.mean(axis=1)
    return check_finite(out, "roi_pool")


def _roi_pool_backward(grad, inputs, output, boxes, output_size, stride, reduction="max"):
    (feature_map,) = inputs
    boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 4)
    depth, height, width = feature_map.shape
    d_map = np.zeros_like(feature_map)
    channels = np.arange(depth)
    for r, box in enumerate(boxes):
        for b, (h0, h1, w0, w1) in enumerate(roi_bins(box, output_size, stride, height, width)):
            if h1 <= h0 or w1 <= w0:
                continue
            i, j = divmod(b, output_size)
            upstream = grad[r, :, i, j]
            if reduction == "mean":
                d_map[:, h0:h1, w0:w1] += (upstream / ((h1 - h0) * (w1 - w0)))[:, None, None]
                continue
            cell = feature_map[:, h0:h1, w0:w1].reshape(depth, -1)
            arg = cell.argmax(axis=1)
            rows = h0 + arg // (w1 - w0)
            cols = w0 + arg % (w1 - w0)
            np.add.at(d_map, (channels, rows, cols), upstream)
    return (d_map,)


register("max_pool2d", max_pool2d, _max_pool2d_backward)
register("adaptive_avg_pool2d", adaptive_avg_pool2d, _adaptive_avg_pool2d_backward)
register("upsample_nearest", upsample_nearest, _upsample_nearest_backward)
register("roi_pool", roi_pool, _roi_pool_backward)
