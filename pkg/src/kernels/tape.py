"""
Reverse-mode recording over registered kernels.

Model code is written once against the small ``leaf`` / ``op`` interface and
runs under either tape: ``Tape`` records nodes for ``backward``;
``InferenceTape`` just evaluates kernels (optionally keeping an op trace).
"""
from typing import Any

import numpy as np

from src.kernels.registry import get_kernel, run_forward


class Node:
    """A recorded value plus the op that produced it."""
    __slots__ = ("value", "grad", "inputs", "op_id", "attrs", "name")

    def __init__(self, value: np.ndarray, inputs=(), op_id: str | None = None, attrs=None, name: str | None = None):
        self.value = value
        self.grad: np.ndarray | None = None
        self.inputs = inputs
        self.op_id = op_id
        self.attrs = attrs or {}
        self.name = name

    @property
    def shape(self) -> tuple:
        return self.value.shape

    def __repr__(self):
        return f"<Node {self.name or self.op_id} shape={self.value.shape}>"


def value_of(x) -> np.ndarray:
    return x.value if isinstance(x, Node) else x


class Tape:
    """Records every kernel application so gradients can be replayed in reverse."""
    requires_grad = True

    def __init__(self):
        self._nodes: list[Node] = []

    def leaf(self, value: np.ndarray, name: str | None = None) -> Node:
        return Node(np.asarray(value), name=name)

    def op(self, op_id: str, *inputs, **attrs: Any) -> Node:
        out = run_forward(op_id, *(value_of(x) for x in inputs), **attrs)
        node = Node(out, inputs=inputs, op_id=op_id, attrs=attrs)
        self._nodes.append(node)
        return node

    def backward(self, root: Node) -> None:
        """Seed d(root)/d(root) = 1 and accumulate ``.grad`` on every upstream node."""
        root.grad = np.ones_like(root.value)
        for node in reversed(self._nodes):
            if node.grad is None or not any(isinstance(x, Node) for x in node.inputs):
                continue
            values = tuple(value_of(x) for x in node.inputs)
            grads = get_kernel(node.op_id).backward(node.grad, values, node.value, **node.attrs)
            for source, grad in zip(node.inputs, grads):
                if isinstance(source, Node) and grad is not None:
                    source.grad = grad if source.grad is None else source.grad + grad


class InferenceTape:
    """Evaluates kernels without recording; optionally keeps (op_id, attrs) pairs."""
    requires_grad = False

    def __init__(self, record: bool = False):
        self.trace: list[tuple[str, dict]] | None = [] if record else None

    def leaf(self, value: np.ndarray, name: str | None = None) -> np.ndarray:
        return value

    def op(self, op_id: str, *inputs, **attrs: Any) -> np.ndarray:
        if self.trace is not None:
            self.trace.append((op_id, attrs))
        return run_forward(op_id, *(value_of(x) for x in inputs), **attrs)


NO_GRAD = InferenceTape()
