"""
Registry of differentiable kernels.

Every kernel is a pure forward function plus a backward function with the
signature ``backward(grad, inputs, output, **attrs) -> tuple`` returning one
gradient per positional input (``None`` for inputs that carry no gradient).
Differentiable tensors are positional inputs; everything else (strides, boxes,
labels, masks) is passed as keyword attributes.
"""
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from src.core.errors import ShapeError, UnknownOpError

ForwardFn = Callable[..., np.ndarray]
BackwardFn = Callable[..., tuple]


@dataclass(frozen=True)
class Kernel:
    op_id: str
    forward: ForwardFn
    backward: BackwardFn


KERNELS: dict[str, Kernel] = {}


def register(op_id: str, forward: ForwardFn, backward: BackwardFn) -> None:
    KERNELS[op_id] = Kernel(op_id, forward, backward)


def get_kernel(op_id: str) -> Kernel:
    try:
        return KERNELS[op_id]
    except KeyError:
        raise UnknownOpError(f"no kernel registered as {op_id!r}") from None


def run_forward(op_id: str, *inputs: np.ndarray, **attrs: Any) -> np.ndarray:
    return get_kernel(op_id).forward(*inputs, **attrs)


def backward(op_id: str, inputs: Sequence[np.ndarray], upstream_grad: np.ndarray, **attrs: Any) -> tuple:
    """
    Reverse-mode gradient of a registered kernel.

    Args:
        op_id (str): Registered kernel name (e.g. ``"conv2d"``).
        inputs (Sequence[np.ndarray]): The positional forward inputs.
        upstream_grad (np.ndarray): Gradient w.r.t. the forward output.
        **attrs: The keyword attributes used in the forward call.

    Returns:
        tuple: One gradient per input, shaped like that input (or None).

    Raises:
        UnknownOpError: If op_id is not registered.
        ShapeError: If upstream_grad does not match the forward output shape.
    """
    kernel = get_kernel(op_id)
    output = kernel.forward(*inputs, **attrs)
    upstream = np.asarray(upstream_grad)
    if upstream.shape != output.shape:
        raise ShapeError(f"{op_id}: upstream grad shape {upstream.shape} != output shape {output.shape}")
    return kernel.backward(upstream.astype(output.dtype, copy=False), tuple(inputs), output, **attrs)
