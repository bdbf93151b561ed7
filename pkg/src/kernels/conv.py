"""
2D cross-correlation with zero padding, stride and dilation.

Accumulation runs tap by tap in row-major kernel order into a float64
accumulator and is rounded once to the output dtype, so results do not depend
on BLAS blocking and a dilated kernel equals its zero-inserted dense form
bitwise.
"""
import numpy as np

from src.core.errors import ShapeError
from src.kernels.registry import register
from src.kernels.tensor import ConvSpec, check_finite, result_dtype


def _as_batch(x: np.ndarray) -> np.ndarray:
    if x.ndim == 3:
        return x[None]
    if x.ndim == 4:
        return x
    raise ShapeError(f"conv2d expects CxHxW or NxCxHxW input, got shape {x.shape}")


def _geometry(x: np.ndarray, weight: np.ndarray, bias, spec: ConvSpec):
    if weight.ndim != 4:
        raise ShapeError(f"conv2d kernel must be OxCxKxK, got {weight.shape}")
    batch = _as_batch(x)
    channels = batch.shape[1]
    out_channels, kernel_channels, kh, kw = weight.shape
    if channels != kernel_channels:
        raise ShapeError(f"conv2d channel mismatch: input {channels}, kernel {kernel_channels}")
    if bias is not None and np.shape(bias) != (out_channels,):
        raise ShapeError(f"conv2d bias shape {np.shape(bias)} != ({out_channels},)")
    oh = spec.output_extent(batch.shape[2], kh)
    ow = spec.output_extent(batch.shape[3], kw)
    return batch, oh, ow


def _tap_slice(i: int, j: int, oh: int, ow: int, spec: ConvSpec):
    s, d = spec.stride, spec.dilation
    return (
        slice(None),
        slice(None),
        slice(i * d, i * d + s * (oh - 1) + 1, s),
        slice(j * d, j * d + s * (ow - 1) + 1, s),
    )


def _pad(batch: np.ndarray, padding: int) -> np.ndarray:
    batch = batch.astype(np.float64)
    if padding == 0:
        return batch
    return np.pad(batch, ((0, 0), (0, 0), (padding, padding), (padding, padding)))


def conv2d(x: np.ndarray, weight: np.ndarray, bias: np.ndarray | None = None, spec: ConvSpec = ConvSpec()) -> np.ndarray:
    """
    Cross-correlate ``x`` with ``weight``.

    Args:
        x (np.ndarray): Input, CxHxW or NxCxHxW.
        weight (np.ndarray): Kernel, OxCxKhxKw.
        bias (np.ndarray | None): Per-output-channel bias of length O.
        spec (ConvSpec): Stride, dilation and padding.

    Returns:
        np.ndarray: OxH'xW' (or NxOxH'xW' for batched input).

    Raises:
        ShapeError: On channel/bias mismatch or an output extent below 1.
        NonFiniteError: If the output contains NaN or Inf.
    """
    batch, oh, ow = _geometry(x, weight, bias, spec)
    dtype = result_dtype(x, weight, bias)
    padded = _pad(batch, spec.padding)
    w64 = weight.astype(np.float64)
    out_channels, _, kh, kw = weight.shape
    # accumulate as OxNxH'xW' so every tap is a single tensordot
    acc = np.zeros((out_channels, batch.shape[0], oh, ow), dtype=np.float64)
    for i in range(kh):
        for j in range(kw):
            patch = padded[_tap_slice(i, j, oh, ow, spec)]
            acc += np.tensordot(w64[:, :, i, j], patch, axes=([1], [1]))
    if bias is not None:
        acc += np.asarray(bias, dtype=np.float64)[:, None, None, None]
    out = acc.transpose(1, 0, 2, 3).astype(dtype)
    if x.ndim == 3:
        out = out[0]
    return check_finite(out, "conv2d")


def _conv2d_backward(grad, inputs, output, spec: ConvSpec = ConvSpec()):
    x, weight = inputs[0], inputs[1]
    bias = inputs[2] if len(inputs) > 2 else None
    batch, oh, ow = _geometry(x, weight, bias, spec)
    padded = _pad(batch, spec.padding)
    w64 = weight.astype(np.float64)
    g = _as_batch(np.asarray(grad, dtype=np.float64)).transpose(1, 0, 2, 3)
    d_padded = np.zeros_like(padded)
    d_weight = np.zeros_like(w64)
    _, _, kh, kw = weight.shape
    for i in range(kh):
        for j in range(kw):
            window = _tap_slice(i, j, oh, ow, spec)
            d_weight[:, :, i, j] = np.tensordot(g, padded[window], axes=([1, 2, 3], [0, 2, 3]))
            d_padded[window] += np.tensordot(w64[:, :, i, j], g, axes=([0], [0])).transpose(1, 0, 2, 3)
    p = spec.padding
    d_x = d_padded[:, :, p:p + batch.shape[2], p:p + batch.shape[3]]
    if x.ndim == 3:
        d_x = d_x[0]
    grads = [d_x.astype(x.dtype), d_weight.astype(weight.dtype)]
    if len(inputs) > 2:
        grads.append(None if bias is None else g.sum(axis=(1, 2, 3)).astype(bias.dtype))
    return tuple(grads)


register("conv2d", conv2d, _conv2d_backward)
