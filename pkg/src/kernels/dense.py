"""Affine, activation, normalization and softmax kernels."""
import numpy as np

from src.core.errors import InvalidArgumentError, ShapeError
from src.kernels.registry import register
from src.kernels.tensor import channel_axis, check_finite


def linear(x: np.ndarray, weight: np.ndarray, bias: np.ndarray | None = None) -> np.ndarray:
    """y = x W^T + b over the last axis of x (leading axes are batch axes)."""
    if weight.ndim != 2 or x.shape[-1] != weight.shape[1]:
        raise ShapeError(f"linear: input {x.shape} incompatible with weight {weight.shape}")
    if bias is not None and bias.shape != (weight.shape[0],):
        raise ShapeError(f"linear: bias {bias.shape} != ({weight.shape[0]},)")
    out = x @ weight.T
    if bias is not None:
        out = out + bias
    return check_finite(out, "linear")


def _linear_backward(grad, inputs, output):
    x, weight = inputs[0], inputs[1]
    flat_grad = grad.reshape(-1, weight.shape[0])
    d_x = grad @ weight
    d_weight = flat_grad.T @ x.reshape(-1, weight.shape[1])
    grads = [d_x.astype(x.dtype), d_weight.astype(weight.dtype)]
    if len(inputs) > 2:
        grads.append(flat_grad.sum(axis=0).astype(inputs[2].dtype))
    return tuple(grads)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0).astype(x.dtype, copy=False)


def _relu_backward(grad, inputs, output):
    return (np.where(inputs[0] > 0, grad, 0).astype(inputs[0].dtype),)


def softmax(x: np.ndarray, axis: int = -1, mask: np.ndarray | None = None) -> np.ndarray:
    """
    Exponential normalization along ``axis``, computed after subtracting the max.

    Positions where ``mask`` is false are treated as -inf scores: they receive
    exactly zero weight and do not take part in the normalization.
    """
    if mask is None:
        shifted = x - x.max(axis=axis, keepdims=True)
        exp = np.exp(shifted)
    else:
        mask = np.broadcast_to(np.asarray(mask, dtype=bool), x.shape)
        if not np.all(mask.any(axis=axis)):
            raise InvalidArgumentError("softmax: every position of a slice is masked")
        peak = np.where(mask, x, -np.inf).max(axis=axis, keepdims=True)
        exp = np.where(mask, np.exp(np.where(mask, x - peak, 0)), 0)
    out = exp / exp.sum(axis=axis, keepdims=True)
    return check_finite(out.astype(x.dtype, copy=False), "softmax")


def _softmax_backward(grad, inputs, output, axis=-1, mask=None):
    inner = (grad * output).sum(axis=axis, keepdims=True)
    return ((output * (grad - inner)).astype(inputs[0].dtype),)


def _channel_view(param: np.ndarray, ndim: int) -> np.ndarray:
    shape = [1] * ndim
    shape[channel_axis(ndim)] = -1
    return np.asarray(param).reshape(shape)


def batchnorm_infer(x, mean, var, gamma, beta, eps: float = 1e-5) -> np.ndarray:
    """
    Frozen-statistics batch normalization: gamma * (x - mean) / sqrt(var + eps) + beta.

    The channel axis is 0 for C and CxHxW inputs and 1 for NxC and NxCxHxW inputs.

    Raises:
        ShapeError: If a per-channel parameter length differs from the channel extent.
        InvalidArgumentError: If any variance is negative.
    """
    channels = x.shape[channel_axis(x.ndim)]
    for name, param in (("mean", mean), ("var", var), ("gamma", gamma), ("beta", beta)):
        if np.shape(param) != (channels,):
            raise ShapeError(f"batchnorm {name} shape {np.shape(param)} != ({channels},)")
    if np.any(np.asarray(var) < 0):
        raise InvalidArgumentError("batchnorm variance must be non-negative")
    inv_std = 1.0 / np.sqrt(_channel_view(var, x.ndim) + eps)
    out = _channel_view(gamma, x.ndim) * (x - _channel_view(mean, x.ndim)) * inv_std + _channel_view(beta, x.ndim)
    return check_finite(out.astype(x.dtype, copy=False), "batchnorm_infer")


def _batchnorm_backward(grad, inputs, output, eps=1e-5):
    x, mean, var, gamma, beta = inputs
    axes = tuple(a for a in range(x.ndim) if a != channel_axis(x.ndim))
    inv_std = 1.0 / np.sqrt(_channel_view(var, x.ndim) + eps)
    centered = x - _channel_view(mean, x.ndim)
    g_gamma = grad * _channel_view(gamma, x.ndim)
    d_x = g_gamma * inv_std
    d_mean = -d_x.sum(axis=axes)
    d_var = (-0.5 * g_gamma * centered * inv_std ** 3).sum(axis=axes)
    d_gamma = (grad * centered * inv_std).sum(axis=axes)
    d_beta = grad.sum(axis=axes)
    return (
        d_x.astype(x.dtype),
        d_mean.astype(np.asarray(mean).dtype),
        d_var.astype(np.asarray(var).dtype),
        d_gamma.astype(np.asarray(gamma).dtype),
        d_beta.astype(np.asarray(beta).dtype),
    )


def l2_normalize(x: np.ndarray, axis: int = -1, eps: float = 1e-12) -> np.ndarray:
    """x / max(||x||, eps); all-zero rows stay zero."""
    norm = np.sqrt((x * x).sum(axis=axis, keepdims=True))
    return check_finite(x / np.maximum(norm, eps), "l2_normalize")


def _l2_normalize_backward(grad, inputs, output, axis=-1, eps=1e-12):
    (x,) = inputs
    norm = np.sqrt((x * x).sum(axis=axis, keepdims=True))
    clamped = np.maximum(norm, eps)
    radial = (grad * output).sum(axis=axis, keepdims=True)
    d_x = np.where(norm > eps, (grad - output * radial) / clamped, grad / eps)
    return (d_x.astype(x.dtype),)


register("linear", linear, _linear_backward)
register("relu", relu, _relu_backward)
register("softmax", softmax, _softmax_backward)
register("batchnorm_infer", batchnorm_infer, _batchnorm_backward)
register("l2_normalize", l2_normalize, _l2_normalize_backward)
