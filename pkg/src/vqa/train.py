import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from src.core.errors import TrainingError
from src.kernels import NO_GRAD, Tape, value_of
from src.schemas.vqa import Schedule, Vocabulary
from src.utils.io import atomic_write
from src.utils.progress import progress
from src.vqa.model import VqaBatch, pad_tokens, stack_features, vqa_forward, vqa_loss
from src.vqa.optim import build_optimizer

logger = logging.getLogger(__name__)

LOSS_LOG_HEADER = ("iteration", "loss", "lr")

LossFn = Callable[[Tape, dict, object], object]


@dataclass
class TrainResult:
    params: dict[str, np.ndarray]
    log: list[tuple[int, float, float]] = field(default_factory=list)

    @property
    def losses(self) -> list[float]:
        return [loss for _, loss, _ in self.log]


def run_training(params: dict[str, np.ndarray], loss_fn: LossFn, next_batch: Callable[[int], object],
                 schedule: Schedule, verbose: bool = False, desc: str = "train") -> TrainResult:
    """
    Generic loop: record the loss on a tape, backpropagate, clip, step.

    Args:
        params (dict): Initial weights; not modified (a copy is trained).
        loss_fn: ``loss_fn(tape, leaves, batch) -> scalar tape value``. Leaves
            are tape nodes for trainable weights and plain arrays otherwise.
        next_batch: ``next_batch(iteration) -> batch``.
        schedule (Schedule): Optimizer, learning rates, clipping, frozen stages.
        verbose (bool): Show a progress bar on a terminal.

    Returns:
        TrainResult: Trained weights and the (iteration, loss, lr) log.

    Raises:
        TrainingError: If the loss becomes NaN or Inf.
    """
    params = {name: np.array(value, copy=True) for name, value in params.items()}
    optimizer = build_optimizer(params, schedule)
    trainable = set(optimizer.names)
    result = TrainResult(params)
    for iteration in progress(range(schedule.iterations), verbose, desc=desc):
        tape = Tape()
        leaves = {name: tape.leaf(value, name=name) if name in trainable else value for name, value in params.items()}
        loss = loss_fn(tape, leaves, next_batch(iteration))
        value = float(value_of(loss))
        if not np.isfinite(value):
            raise TrainingError(f"{desc}: loss became {value} at iteration {iteration}")
        tape.backward(loss)
        grads = {
            name: leaves[name].grad for name in trainable
            if leaves[name].grad is not None
        }
        lr = optimizer.step(grads, iteration)
        result.log.append((iteration, value, lr))
        if iteration % 100 == 0:
            logger.debug(f"{desc} iteration {iteration}: loss {value:.5f} lr {lr:g}")
    logger.info(f"{desc}: {schedule.iterations} iterations, final loss {result.log[-1][1]:.5f}")
    return result


def write_loss_log(log: list[tuple[int, float, float]], path: str | Path) -> None:
    with atomic_write(path, "w") as f:
        writer = csv.writer(f)
        writer.writerow(LOSS_LOG_HEADER)
        for iteration, loss, lr in log:
            writer.writerow((iteration, repr(loss), repr(lr)))


# -- VQA head training on cached features -----------------------------------------

@dataclass(frozen=True, eq=False)
class VqaExample:
    image_id: str
    tokens: list[int]
    target: np.ndarray
    qtype: str = ""


def make_batch(examples: list[VqaExample], features: dict, config) -> VqaBatch:
    sets = [features[e.image_id] for e in examples]
    vectors, mask = stack_features(sets, as_maps=config.ppm.enabled)
    tokens, token_mask = pad_tokens([e.tokens for e in examples])
    return VqaBatch(vectors, mask, tokens, token_mask, np.stack([e.target for e in examples]))


def batch_sampler(count: int, batch_size: int, seed: int) -> Callable[[int], np.ndarray]:
    """Epoch-wise shuffled index batches, reproducible from ``seed``."""
    rng = np.random.default_rng(seed)
    state = {"order": np.zeros(0, dtype=np.int64)}

    def sample(_: int) -> np.ndarray:
        size = min(batch_size, count)
        if len(state["order"]) < size:
            state["order"] = np.concatenate([state["order"], rng.permutation(count)])
        picked, state["order"] = state["order"][:size], state["order"][size:]
        return picked

    return sample


def vqa_examples(records, vocab: Vocabulary) -> list[VqaExample]:
    """
    One example per question of each SceneRecord.

    The target is one-hot on the answer; answers missing from the vocabulary
    get an all-zero target and can never be scored correct.
    """
    examples = []
    for record in records:
        for pair in record.questions:
            target = np.zeros(len(vocab.answers), dtype=np.float64)
            if pair.answer in vocab.answers:
                target[vocab.answers[pair.answer]] = 1.0
            examples.append(VqaExample(record.image_id, vocab.encode(list(pair.tokens)), target, pair.qtype))
    return examples


def train_vqa(params: dict, examples: list[VqaExample], features: dict, config, schedule: Schedule,
              seed: int = 0, verbose: bool = False) -> TrainResult:
    """
    Train the VQA head on cached FeatureSets.

    Args:
        params (dict): Initial head weights.
        examples (list[VqaExample]): Questions with soft answer targets.
        features (dict): image_id -> FeatureSet.
        config (VqaConfig): Head configuration.
        schedule (Schedule): Optimizer and learning-rate schedule.
        seed (int): Seed of the batch order.

    Raises:
        TrainingError: On an empty dataset or a diverging loss.
    """
    if not examples:
        raise TrainingError("cannot train on an empty dataset")
    sample = batch_sampler(len(examples), schedule.batch_size, seed)

    def next_batch(iteration: int):
        return make_batch([examples[i] for i in sample(iteration)], features, config)

    def loss_fn(tape, leaves, batch):
        logits, _ = vqa_forward(tape, leaves, batch, config)
        return vqa_loss(tape, logits, batch.targets)

    return run_training(params, loss_fn, next_batch, schedule, verbose=verbose, desc="vqa")


def evaluate_vqa(params: dict, examples: list[VqaExample], features: dict, config, batch_size: int = 256) -> dict:
    """Soft accuracy overall and per question type."""
    scores: list[float] = []
    for start in range(0, len(examples), batch_size):
        chunk = examples[start:start + batch_size]
        batch = make_batch(chunk, features, config)
        logits, _ = vqa_forward(NO_GRAD, params, batch, config)
        predicted = np.asarray(logits).argmax(axis=1)
        scores.extend(float(batch.targets[i, p]) for i, p in enumerate(predicted))
    by_type: dict[str, list[float]] = {}
    for example, score in zip(examples, scores):
        by_type.setdefault(example.qtype, []).append(score)
    return {
        "accuracy": float(np.mean(scores)) if scores else 0.0,
        "per_type": {qtype: float(np.mean(values)) for qtype, values in sorted(by_type.items())},
        "count": len(scores),
    }
