"""
End-to-end VQA: grid features are recomputed from pixels on the tape, so the
VQA loss back-propagates into every backbone stage that is not frozen.
"""
import logging

import numpy as np

from src.backbone.preprocess import to_batch
from src.backbone.resnet import grid_features
from src.core.errors import TrainingError
from src.kernels import value_of
from src.data.augment import augment
from src.schemas.backbone import BackboneConfig
from src.schemas.data import AugmentPolicy
from src.schemas.vqa import Schedule, VqaConfig
from src.vqa.model import VqaBatch, grid_rows, pad_tokens, vqa_forward, vqa_loss
from src.vqa.train import TrainResult, VqaExample, batch_sampler, run_training

logger = logging.getLogger(__name__)


def e2e_forward(t, params: dict, images, tokens, token_mask, backbone: BackboneConfig, config: VqaConfig):
    """Logits and attention for normalized images (B x 3 x H x W) and padded questions."""
    maps = grid_features(images, params, backbone, t=t)
    batch, _, gh, gw = value_of(maps).shape
    features = maps if config.ppm.enabled else grid_rows(t, maps)
    mask = np.ones((batch, gh * gw), dtype=bool)
    return vqa_forward(t, params, VqaBatch(features, mask, tokens, token_mask), config)


def train_e2e(params: dict, examples: list[VqaExample], images: dict[str, np.ndarray], backbone: BackboneConfig,
              config: VqaConfig, schedule: Schedule, policy: AugmentPolicy | None = None, seed: int = 0,
              verbose: bool = False) -> TrainResult:
    """
    Jointly fine-tune backbone and VQA head.

    Args:
        params (dict): Backbone weights merged with VQA head (and PPM) weights.
        examples (list[VqaExample]): Questions with soft targets.
        images (dict): image_id -> HxWx3 uint8 image (equal sizes).
        backbone (BackboneConfig): Backbone layout; C5 runs in standard mode.
        config (VqaConfig): Head configuration.
        schedule (Schedule): Usually the ``e2e`` preset, freezing stem and res2.
        policy (AugmentPolicy | None): Per-iteration augmentation.
        seed (int): Seed of batch order and augmentation.
    """
    if not examples:
        raise TrainingError("cannot train on an empty dataset")
    sample = batch_sampler(len(examples), schedule.batch_size, seed)

    def next_batch(iteration: int):
        chosen = [examples[i] for i in sample(iteration)]
        pixels = [images[e.image_id] for e in chosen]
        if policy is not None and not policy.is_identity:
            states = np.random.SeedSequence([seed, 1, iteration]).generate_state(len(pixels))
            pixels = [augment(p, int(s), policy) for p, s in zip(pixels, states)]
        tokens, token_mask = pad_tokens([e.tokens for e in chosen])
        return to_batch(pixels), tokens, token_mask, np.stack([e.target for e in chosen])

    def loss_fn(tape, leaves, batch):
        images_, tokens, token_mask, targets = batch
        logits, _ = e2e_forward(tape, leaves, images_, tokens, token_mask, backbone, config)
        return vqa_loss(tape, logits, targets)

    logger.info(f"End-to-end training with frozen prefixes {schedule.frozen}")
    return run_training(params, loss_fn, next_batch, schedule, verbose=verbose, desc="e2e")
