"""
Central finite-difference checks of analytic gradients.

Checks run in float64: every kernel preserves float64 inputs, so the numerical
derivative is not swamped by float32 rounding.
"""
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from src.kernels.registry import backward, run_forward
from src.kernels.tape import InferenceTape, Tape


@dataclass(frozen=True)
class GradcheckResult:
    max_abs_error: float
    max_rel_error: float
    worst: str
    ok: bool


def _compare(analytic: Sequence[np.ndarray], numeric: Sequence[np.ndarray], names, rtol, atol) -> GradcheckResult:
    worst_abs, worst_rel, worst, ok = 0.0, 0.0, "", True
    for name, a, n in zip(names, analytic, numeric):
        a = np.zeros_like(n) if a is None else np.asarray(a, dtype=np.float64)
        error = np.abs(a - n)
        bound = atol + rtol * np.abs(n)
        rel = error / np.maximum(np.abs(n), atol)
        if error.size and error.max() > worst_abs:
            worst_abs = float(error.max())
        if rel.size and rel.max() > worst_rel:
            worst_rel, worst = float(rel.max()), name
        ok = ok and bool(np.all(error <= bound))
    return GradcheckResult(worst_abs, worst_rel, worst, ok)


def numerical_grad(fn: Callable[[list[np.ndarray]], float], inputs: list[np.ndarray], index: int, eps: float) -> np.ndarray:
    """d fn / d inputs[index] by central differences, element by element."""
    target = inputs[index]
    grad = np.zeros_like(target, dtype=np.float64)
    flat = target.reshape(-1)
    for k in range(flat.size):
        original = flat[k]
        flat[k] = original + eps
        plus = fn(inputs)
        flat[k] = original - eps
        minus = fn(inputs)
        flat[k] = original
        grad.reshape(-1)[k] = (plus - minus) / (2 * eps)
    return grad


def check_kernel(
    op_id: str,
    inputs: Sequence[np.ndarray],
    attrs: dict | None = None,
    wrt: Sequence[int] | None = None,
    eps: float = 1e-3,
    rtol: float = 1e-4,
    atol: float = 1e-6,
    seed: int = 0,
) -> GradcheckResult:
    """
    Compare ``backward(op_id, ...)`` with central differences of <output, upstream>.

    Args:
        op_id (str): Registered kernel.
        inputs: Positional inputs (converted to float64 copies).
        attrs (dict | None): Keyword attributes of the kernel.
        wrt: Input indices to check (default: all).
        eps, rtol, atol: Step and tolerances.
        seed (int): Seed of the random upstream gradient.
    """
    attrs = attrs or {}
    values = [np.array(x, dtype=np.float64) for x in inputs]
    output = run_forward(op_id, *values, **attrs)
    upstream = np.random.default_rng(seed).standard_normal(output.shape)
    analytic = backward(op_id, values, upstream, **attrs)

    def objective(current):
        return float((run_forward(op_id, *current, **attrs) * upstream).sum())

    indices = list(range(len(values))) if wrt is None else list(wrt)
    numeric = [numerical_grad(objective, values, i, eps) for i in indices]
    return _compare([analytic[i] for i in indices], numeric, [f"{op_id}[{i}]" for i in indices], rtol, atol)


def check_function(
    fn: Callable,
    params: dict[str, np.ndarray],
    eps: float = 1e-6,
    rtol: float = 1e-4,
    atol: float = 1e-6,
) -> GradcheckResult:
    """
    Check a composite scalar function written against the tape interface.

    Args:
        fn: ``fn(tape, params) -> scalar`` where params maps names to leaves
            (nodes under a Tape, arrays under an InferenceTape).
        params: Named float64 arrays to differentiate.
    """
    values = {name: np.array(v, dtype=np.float64) for name, v in params.items()}
    tape = Tape()
    leaves = {name: tape.leaf(v, name=name) for name, v in values.items()}
    loss = fn(tape, leaves)
    tape.backward(loss)
    names = list(values)
    inference = InferenceTape()

    def objective_for(name):
        def objective(current):
            return float(np.asarray(fn(inference, {**values, name: current[0]})).sum())
        return objective

    numeric = [numerical_grad(objective_for(name), [values[name]], 0, eps) for name in names]
    return _compare([leaves[name].grad for name in names], numeric, names, rtol, atol)
