"""Broadcasting arithmetic, reductions and shape manipulation."""
import numpy as np

from src.core.errors import LabelError, ShapeError
from src.kernels.registry import register
from src.kernels.tensor import check_finite


def unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum ``grad`` over the axes numpy broadcast to reach it from ``shape``."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return check_finite(np.add(a, b), "add")


def _add_backward(grad, inputs, output):
    a, b = inputs
    return unbroadcast(grad, np.shape(a)), unbroadcast(grad, np.shape(b))


def mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return check_finite(np.multiply(a, b), "mul")


def _mul_backward(grad, inputs, output):
    a, b = inputs
    return unbroadcast(grad * b, np.shape(a)), unbroadcast(grad * a, np.shape(b))


def scale(x: np.ndarray, factor: float) -> np.ndarray:
    return (x * factor).astype(x.dtype, copy=False)


def _scale_backward(grad, inputs, output, factor):
    return ((grad * factor).astype(inputs[0].dtype),)


def reduce_sum(x: np.ndarray, axis=None, keepdims: bool = False) -> np.ndarray:
    return np.asarray(x.sum(axis=axis, keepdims=keepdims))


def _expand_reduced(grad, shape, axis, keepdims):
    if axis is None:
        return np.broadcast_to(grad, shape)
    if not keepdims:
        axes = (axis,) if isinstance(axis, int) else tuple(axis)
        grad = np.expand_dims(grad, tuple(a % len(shape) for a in axes))
    return np.broadcast_to(grad, shape)


def _sum_backward(grad, inputs, output, axis=None, keepdims=False):
    (x,) = inputs
    return (np.array(_expand_reduced(grad, x.shape, axis, keepdims), dtype=x.dtype),)


def reduce_mean(x: np.ndarray, axis=None, keepdims: bool = False) -> np.ndarray:
    return np.asarray(x.mean(axis=axis, keepdims=keepdims))


def _mean_backward(grad, inputs, output, axis=None, keepdims=False):
    (x,) = inputs
    count = x.size // max(np.asarray(output).size, 1)
    return (np.array(_expand_reduced(grad, x.shape, axis, keepdims), dtype=x.dtype) / count,)


def reshape(x: np.ndarray, shape: tuple) -> np.ndarray:
    return x.reshape(shape)


def _reshape_backward(grad, inputs, output, shape):
    return (grad.reshape(inputs[0].shape),)


def transpose(x: np.ndarray, axes: tuple) -> np.ndarray:
    return np.ascontiguousarray(x.transpose(axes))


def _transpose_backward(grad, inputs, output, axes):
    return (np.ascontiguousarray(grad.transpose(np.argsort(axes))),)


def concat(*xs: np.ndarray, axis: int = 0) -> np.ndarray:
    return np.concatenate(xs, axis=axis)


def _concat_backward(grad, inputs, output, axis=0):
    bounds = np.cumsum([x.shape[axis] for x in inputs])[:-1]
    return tuple(np.split(grad, bounds, axis=axis))


def embedding(table: np.ndarray, ids) -> np.ndarray:
    """Gather rows of ``table``; ids may have any shape."""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise LabelError(f"embedding ids must lie in [0, {table.shape[0]})")
    if table.ndim != 2:
        raise ShapeError(f"embedding table must be a matrix, got {table.shape}")
    return table[ids]


def _embedding_backward(grad, inputs, output, ids):
    (table,) = inputs
    d_table = np.zeros_like(table)
    np.add.at(d_table, np.asarray(ids, dtype=np.int64).reshape(-1), grad.reshape(-1, table.shape[1]))
    return (d_table,)


register("add", add, _add_backward)
register("mul", mul, _mul_backward)
register("scale", scale, _scale_backward)
register("sum", reduce_sum, _sum_backward)
register("mean", reduce_mean, _mean_backward)
register("reshape", reshape, _reshape_backward)
register("transpose", transpose, _transpose_backward)
register("concat", concat, _concat_backward)
register("embedding", embedding, _embedding_backward)


def mask_fill(x: np.ndarray, mask, value: float = 0.0) -> np.ndarray:
    """Replace positions where ``mask`` is false by ``value`` (mask broadcasts against x)."""
    keep = np.broadcast_to(np.asarray(mask, dtype=bool), x.shape)
    return np.where(keep, x, value).astype(x.dtype, copy=False)


def _mask_fill_backward(grad, inputs, output, mask, value=0.0):
    keep = np.broadcast_to(np.asarray(mask, dtype=bool), inputs[0].shape)
    return (np.where(keep, grad, 0).astype(inputs[0].dtype),)


register("mask_fill", mask_fill, _mask_fill_backward)
