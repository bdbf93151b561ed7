from dataclasses import dataclass

import numpy as np

from src.core.errors import NonFiniteError, ShapeError, InvalidArgumentError

MAX_RANK = 4


def as_tensor(values, dtype=np.float32) -> np.ndarray:
    """
    Convert array-like values into the dense tensor type used by every kernel.

    Args:
        values: Anything numpy can turn into an array.
        dtype: Floating dtype of the result (float32 for pipelines).

    Returns:
        np.ndarray: A C-contiguous array of rank at most 4.

    Raises:
        ShapeError: If the rank exceeds 4 or an extent is zero.
        NonFiniteError: If any value is NaN or Inf.
    """
    array = np.ascontiguousarray(values, dtype=dtype)
    if array.ndim > MAX_RANK:
        raise ShapeError(f"tensor rank {array.ndim} exceeds {MAX_RANK}")
    if any(extent == 0 for extent in array.shape):
        raise ShapeError(f"tensor extents must be positive, got {array.shape}")
    return check_finite(array, "as_tensor")


def check_finite(array: np.ndarray, op_id: str) -> np.ndarray:
    if not np.all(np.isfinite(array)):
        raise NonFiniteError(f"{op_id} produced non-finite values")
    return array


def result_dtype(*arrays) -> np.dtype:
    """float64 if any floating input is float64, float32 otherwise."""
    for array in arrays:
        if array is not None and np.asarray(array).dtype == np.float64:
            return np.dtype(np.float64)
    return np.dtype(np.float32)


def channel_axis(ndim: int) -> int:
    # C, CxHxW -> 0; NxC, NxCxHxW -> 1
    return 1 if ndim in (2, 4) else 0


@dataclass(frozen=True)
class ConvSpec:
    """Stride, dilation and symmetric zero padding of a 2D convolution."""
    stride: int = 1
    dilation: int = 1
    padding: int = 0

    def __post_init__(self):
        if self.stride < 1 or self.dilation < 1 or self.padding < 0:
            raise InvalidArgumentError(f"invalid conv spec {self}")

    def output_extent(self, size: int, kernel: int) -> int:
        extent = (size + 2 * self.padding - self.dilation * (kernel - 1) - 1) // self.stride + 1
        if extent < 1:
            raise ShapeError(f"conv output extent {extent} < 1 for input {size}, kernel {kernel}, {self}")
        return extent
