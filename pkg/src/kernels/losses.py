"""Scalar loss kernels. Targets, labels and weights are attributes, not inputs."""
import numpy as np

from src.core.errors import LabelError, ShapeError
from src.kernels.registry import register


def sigmoid(x) -> np.ndarray:
    """Logistic function without overflow for large |x|."""
    x = np.asarray(x, dtype=np.float64)
    return np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))), np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))


def _weights_and_norm(shape, weights, normalizer):
    w = np.ones(shape) if weights is None else np.broadcast_to(np.asarray(weights, dtype=np.float64), shape)
    norm = float(w.sum()) if normalizer is None else float(normalizer)
    return w, max(norm, 1e-12)


def bce_with_logits(logits: np.ndarray, targets, weights=None, normalizer=None) -> np.ndarray:
    """
    Binary cross-entropy on logits with soft targets in [0, 1].

    Computed as max(x, 0) - x t + log(1 + exp(-|x|)); the weighted sum is divided
    by ``normalizer`` (default: the sum of weights, i.e. the mean).
    """
    targets = np.asarray(targets, dtype=np.float64)
    if targets.shape != logits.shape:
        raise ShapeError(f"bce targets {targets.shape} != logits {logits.shape}")
    if np.any(targets < 0) or np.any(targets > 1):
        raise LabelError("bce targets must lie in [0, 1]")
    w, norm = _weights_and_norm(logits.shape, weights, normalizer)
    x = logits.astype(np.float64)
    per_element = np.maximum(x, 0) - x * targets + np.log1p(np.exp(-np.abs(x)))
    return np.asarray((w * per_element).sum() / norm, dtype=logits.dtype)


def _bce_backward(grad, inputs, output, targets, weights=None, normalizer=None):
    (logits,) = inputs
    w, norm = _weights_and_norm(logits.shape, weights, normalizer)
    x = logits.astype(np.float64)
    d_logits = grad * w * (sigmoid(x) - np.asarray(targets, dtype=np.float64)) / norm
    return (d_logits.astype(logits.dtype),)


def _log_softmax(x):
    shifted = x - x.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def _valid_labels(logits, labels, ignore_index):
    labels = np.asarray(labels, dtype=np.int64)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ShapeError(f"cross_entropy expects RxC logits and R labels, got {logits.shape} / {labels.shape}")
    valid = labels != ignore_index
    if np.any(labels[valid] < 0) or np.any(labels[valid] >= logits.shape[1]):
        raise LabelError(f"cross_entropy labels must lie in [0, {logits.shape[1]})")
    return labels, valid


def cross_entropy(logits: np.ndarray, labels, ignore_index: int = -1) -> np.ndarray:
    """Mean softmax cross-entropy over rows whose label is not ``ignore_index``; 0 if none."""
    labels, valid = _valid_labels(logits, labels, ignore_index)
    count = int(valid.sum())
    if count == 0:
        return np.asarray(0.0, dtype=logits.dtype)
    log_probs = _log_softmax(logits.astype(np.float64))
    picked = log_probs[np.flatnonzero(valid), labels[valid]]
    return np.asarray(-picked.sum() / count, dtype=logits.dtype)


def _cross_entropy_backward(grad, inputs, output, labels, ignore_index=-1):
    (logits,) = inputs
    labels, valid = _valid_labels(logits, labels, ignore_index)
    count = int(valid.sum())
    d_logits = np.zeros(logits.shape, dtype=np.float64)
    if count:
        rows = np.flatnonzero(valid)
        probs = np.exp(_log_softmax(logits[rows].astype(np.float64)))
        probs[np.arange(len(rows)), labels[rows]] -= 1.0
        d_logits[rows] = grad * probs / count
    return (d_logits.astype(logits.dtype),)


def smooth_l1(pred: np.ndarray, targets, weights=None, beta: float = 1.0, normalizer=None) -> np.ndarray:
    """Huber-style loss: 0.5 d^2 / beta where |d| < beta, |d| - 0.5 beta elsewhere."""
    targets = np.asarray(targets, dtype=np.float64)
    if targets.shape != pred.shape:
        raise ShapeError(f"smooth_l1 targets {targets.shape} != predictions {pred.shape}")
    w, norm = _weights_and_norm(pred.shape, weights, normalizer)
    diff = np.abs(pred.astype(np.float64) - targets)
    per_element = np.where(diff < beta, 0.5 * diff ** 2 / beta, diff - 0.5 * beta)
    return np.asarray((w * per_element).sum() / norm, dtype=pred.dtype)


def _smooth_l1_backward(grad, inputs, output, targets, weights=None, beta=1.0, normalizer=None):
    (pred,) = inputs
    w, norm = _weights_and_norm(pred.shape, weights, normalizer)
    diff = pred.astype(np.float64) - np.asarray(targets, dtype=np.float64)
    slope = np.where(np.abs(diff) < beta, diff / beta, np.sign(diff))
    return ((grad * w * slope / norm).astype(pred.dtype),)


register("bce_with_logits", bce_with_logits, _bce_backward)
register("cross_entropy", cross_entropy, _cross_entropy_backward)
register("smooth_l1", smooth_l1, _smooth_l1_backward)
