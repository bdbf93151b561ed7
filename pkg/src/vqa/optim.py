"""
Optimizers over named parameter collections.

SGD follows the momentum-buffer form (weight decay folded into the gradient);
Adamax keeps an exponentially weighted infinity norm. Frozen parameters, by
stage prefix or because they are batch-norm statistics, are never touched.
"""
import logging

import numpy as np

from src.backbone.resnet import is_trainable
from src.core.errors import TrainingError
from src.schemas.vqa import Schedule

logger = logging.getLogger(__name__)


def is_frozen(name: str, frozen_prefixes) -> bool:
    return any(name == p or name.startswith(f"{p}.") for p in frozen_prefixes)


def trainable_names(params: dict, schedule: Schedule) -> list[str]:
    return [name for name in params if is_trainable(name) and not is_frozen(name, schedule.frozen)]


def global_norm(grads: dict[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(np.square(g, dtype=np.float64))) for g in grads.values())))


def clip_gradients(grads: dict[str, np.ndarray], max_norm: float | None) -> tuple[dict[str, np.ndarray], float]:
    """Scale all gradients together so their global L2 norm is at most ``max_norm``."""
    norm = global_norm(grads)
    if max_norm is None or norm <= max_norm:
        return grads, norm
    factor = max_norm / (norm + 1e-6)
    return {name: g * factor for name, g in grads.items()}, norm


class Optimizer:
    def __init__(self, params: dict[str, np.ndarray], schedule: Schedule):
        if schedule.base_lr <= 0:
            raise TrainingError(f"learning rate must be positive, got {schedule.base_lr}")
        self.params = params
        self.schedule = schedule
        self.names = trainable_names(params, schedule)
        self.steps = 0

    def step(self, grads: dict[str, np.ndarray], iteration: int) -> float:
        """Apply one update; returns the learning rate used."""
        lr = self.schedule.lr_at(iteration)
        grads, _ = clip_gradients({n: grads[n] for n in self.names if n in grads}, self.schedule.grad_clip)
        self.steps += 1
        for name, grad in grads.items():
            self.params[name] = self._update(name, self.params[name], grad.astype(np.float64), lr)
        return lr

    def _update(self, name: str, param: np.ndarray, grad: np.ndarray, lr: float) -> np.ndarray:
        raise NotImplementedError


class SGDMomentum(Optimizer):
    def __init__(self, params, schedule):
        super().__init__(params, schedule)
        self.buffers: dict[str, np.ndarray] = {}

    def _update(self, name, param, grad, lr):
        grad = grad + self.schedule.weight_decay * param
        buffer = self.buffers.get(name)
        buffer = grad if buffer is None else self.schedule.momentum * buffer + grad
        self.buffers[name] = buffer
        return (param - lr * buffer).astype(param.dtype)


class Adamax(Optimizer):
    eps = 1e-8

    def __init__(self, params, schedule):
        super().__init__(params, schedule)
        self.exp_avg: dict[str, np.ndarray] = {}
        self.exp_inf: dict[str, np.ndarray] = {}

    def _update(self, name, param, grad, lr):
        beta1, beta2 = self.schedule.betas
        m = self.exp_avg.get(name, np.zeros_like(grad))
        u = self.exp_inf.get(name, np.zeros_like(grad))
        m = beta1 * m + (1 - beta1) * grad
        u = np.maximum(beta2 * u, np.abs(grad) + self.eps)
        self.exp_avg[name], self.exp_inf[name] = m, u
        step_size = lr / (1 - beta1 ** self.steps)
        return (param - step_size * m / u).astype(param.dtype)


def build_optimizer(params: dict[str, np.ndarray], schedule: Schedule) -> Optimizer:
    if schedule.optimizer == "sgd_momentum":
        return SGDMomentum(params, schedule)
    return Adamax(params, schedule)
