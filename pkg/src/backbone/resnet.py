"""
Residual backbone with the C4 / C5 split.

Weights live in a flat ``{name: array}`` collection so they can be saved as
GFWT and passed to the tape-based forward functions below, which run either
under a recording ``Tape`` (training) or an ``InferenceTape``.

Names follow the module structure: ``stem.conv.weight``, ``stem.bn.gamma``,
``res3.0.conv1.weight``, ``res3.0.bn2.var``, ``res3.0.shortcut.weight``,
``res3.0.shortcut_bn.mean`` and so on.
"""
import logging
from typing import Literal

import numpy as np

from src.core.errors import ShapeError
from src.kernels import ConvSpec, NO_GRAD
from src.schemas.backbone import BackboneConfig, STAGE_NAMES

logger = logging.getLogger(__name__)

C5Mode = Literal["standard", "dilated"]
MIN_IMAGE_SIZE = 32
BN_STATS = (".mean", ".var")


def _he_normal(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    fan_in = int(np.prod(shape[1:]))
    return (rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)).astype(np.float32)


def _bn(weights: dict, prefix: str, channels: int) -> None:
    weights[f"{prefix}.gamma"] = np.ones(channels, np.float32)
    weights[f"{prefix}.beta"] = np.zeros(channels, np.float32)
    weights[f"{prefix}.mean"] = np.zeros(channels, np.float32)
    weights[f"{prefix}.var"] = np.ones(channels, np.float32)


def stage_block_names(config: BackboneConfig) -> list[tuple[str, int, int, int, int]]:
    """(stage, block index, in channels, out channels, stride) for every residual block."""
    blocks = []
    in_channels = config.stage_channels[0]
    for s, stage in enumerate(STAGE_NAMES[1:], start=1):
        out_channels = config.stage_channels[s]
        for b in range(config.blocks_per_stage[s]):
            stride = config.stage_strides[s - 1] if b == 0 else 1
            blocks.append((stage, b, in_channels, out_channels, stride))
            in_channels = out_channels
    return blocks


def needs_projection(in_channels: int, out_channels: int, stride: int) -> bool:
    return in_channels != out_channels or stride != 1


def build_backbone(config: BackboneConfig, seed: int) -> dict[str, np.ndarray]:
    """
    Deterministically initialize backbone weights.

    Convolutions are He-normal (std sqrt(2 / fan_in)); batch norms start as
    identities. Identical (config, seed) pairs give bitwise identical weights.

    Args:
        config (BackboneConfig): Validated stage layout.
        seed (int): Seed of the weight initialization.

    Returns:
        dict[str, np.ndarray]: Named float32 tensors.
    """
    rng = np.random.default_rng(seed)
    weights: dict[str, np.ndarray] = {}
    stem_channels = config.stage_channels[0]
    weights["stem.conv.weight"] = _he_normal(rng, (stem_channels, 3, 7, 7))
    _bn(weights, "stem.bn", stem_channels)
    for stage, b, in_channels, out_channels, stride in stage_block_names(config):
        prefix = f"{stage}.{b}"
        weights[f"{prefix}.conv1.weight"] = _he_normal(rng, (out_channels, in_channels, 3, 3))
        _bn(weights, f"{prefix}.bn1", out_channels)
        weights[f"{prefix}.conv2.weight"] = _he_normal(rng, (out_channels, out_channels, 3, 3))
        _bn(weights, f"{prefix}.bn2", out_channels)
        if needs_projection(in_channels, out_channels, stride):
            weights[f"{prefix}.shortcut.weight"] = _he_normal(rng, (out_channels, in_channels, 1, 1))
            _bn(weights, f"{prefix}.shortcut_bn", out_channels)
    logger.debug(f"Initialized backbone with {len(weights)} tensors (seed {seed})")
    return weights


def _conv_bn(t, params: dict, conv: str, bn: str, x, spec: ConvSpec):
    y = t.op("conv2d", x, params[f"{conv}.weight"], spec=spec)
    return t.op(
        "batchnorm_infer", y,
        params[f"{bn}.mean"], params[f"{bn}.var"], params[f"{bn}.gamma"], params[f"{bn}.beta"],
    )


def residual_block(t, params: dict, prefix: str, x, stride: int = 1, dilation: int = 1, entry_dilation: int | None = None):
    """
    Basic block: 3x3 conv-BN-ReLU, 3x3 conv-BN, add shortcut, ReLU.

    ``entry_dilation`` applies to the first conv only (the conv that carries
    the stride); the second conv always uses ``dilation``.
    """
    first = entry_dilation or dilation
    y = _conv_bn(t, params, f"{prefix}.conv1", f"{prefix}.bn1", x, ConvSpec(stride=stride, dilation=first, padding=first))
    y = t.op("relu", y)
    y = _conv_bn(t, params, f"{prefix}.conv2", f"{prefix}.bn2", y, ConvSpec(dilation=dilation, padding=dilation))
    if f"{prefix}.shortcut.weight" in params:
        shortcut = _conv_bn(t, params, f"{prefix}.shortcut", f"{prefix}.shortcut_bn", x, ConvSpec(stride=stride))
    else:
        shortcut = x
    return t.op("relu", t.op("add", y, shortcut))


def _check_image(image) -> None:
    shape = np.shape(image)
    if len(shape) not in (3, 4) or shape[-3] != 3:
        raise ShapeError(f"expected a 3xHxW (or Nx3xHxW) image, got {shape}")
    if shape[-2] < MIN_IMAGE_SIZE or shape[-1] < MIN_IMAGE_SIZE:
        raise ShapeError(f"image {shape[-2]}x{shape[-1]} is smaller than {MIN_IMAGE_SIZE}x{MIN_IMAGE_SIZE}")


def stem(t, params: dict, image, config: BackboneConfig):
    conv_stride = 1 if config.stem_stride == 1 else 2
    x = _conv_bn(t, params, "stem.conv", "stem.bn", image, ConvSpec(stride=conv_stride, padding=3))
    x = t.op("relu", x)
    if config.stem_stride == 4:
        x = t.op("max_pool2d", x, kernel_size=3, stride=2, padding=1)
    return x


def _run_stage(t, params: dict, stage: str, x, config: BackboneConfig, dilated: bool = False):
    for name, b, _, _, stride in stage_block_names(config):
        if name != stage:
            continue
        if dilated:
            # stride-2 entry becomes stride 1; every later 3x3 conv sees the
            # upsampled lattice, hence dilation 2
            x = residual_block(t, params, f"{stage}.{b}", x, stride=1, dilation=2, entry_dilation=1 if b == 0 else 2)
        else:
            x = residual_block(t, params, f"{stage}.{b}", x, stride=stride)
    return x


def forward_to_c4(image, weights: dict, config: BackboneConfig, t=NO_GRAD):
    """
    Stem and res2..res4: the stride-16 map shared by every region.

    Args:
        image: 3xHxW (or Nx3xHxW) normalized image.
        weights (dict): Backbone weights (arrays, or tape nodes when training).
        config (BackboneConfig): Stage layout.
        t: Tape to run under.

    Returns:
        The C4 map with extents ceil(H/16) x ceil(W/16).

    Raises:
        ShapeError: If the image is smaller than 32x32.
    """
    _check_image(image)
    x = stem(t, weights, image, config)
    for stage in STAGE_NAMES[1:4]:
        x = _run_stage(t, weights, stage, x, config)
    return x


def forward_c5(c4_map, weights: dict, config: BackboneConfig, mode: C5Mode = "standard", t=NO_GRAD):
    """res5 on top of C4: halves the extents in standard mode, keeps them in dilated mode."""
    if mode not in ("standard", "dilated"):
        raise ShapeError(f"unknown C5 mode {mode!r}")
    return _run_stage(t, weights, "res5", c4_map, config, dilated=mode == "dilated")


def forward(image, weights: dict, config: BackboneConfig, mode: C5Mode = "standard", t=NO_GRAD):
    """Fused C4 + C5 pass; returns (c4, c5)."""
    c4 = forward_to_c4(image, weights, config, t=t)
    return c4, forward_c5(c4, weights, config, mode=mode, t=t)


def grid_features(image, weights: dict, config: BackboneConfig, t=NO_GRAD):
    """
    The C5 map used as grid features.

    Always standard mode: weights trained with a dilated C5 are converted back
    to the plain network (same weights, stride 2, no dilation) for extraction.
    """
    c4 = forward_to_c4(image, weights, config, t=t)
    return forward_c5(c4, weights, config, mode="standard", t=t)


def grid_extent(size: int, stride: int = 32) -> int:
    return -(-size // stride)


def grid_count(height: int, width: int, stride: int = 32) -> int:
    """Number of grid features of an HxW image: ceil(H/32) * ceil(W/32)."""
    return grid_extent(height, stride) * grid_extent(width, stride)


def is_trainable(name: str) -> bool:
    """Frozen batch-norm statistics are constants, never parameters."""
    return not name.endswith(BN_STATS)


# -- classification pretraining head -------------------------------------------

def build_classifier(config: BackboneConfig, num_classes: int, seed: int) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(seed)
    scale = 1.0 / np.sqrt(config.c5_channels)
    return {
        "cls_pretrain.weight": (rng.standard_normal((num_classes, config.c5_channels)) * scale).astype(np.float32),
        "cls_pretrain.bias": np.zeros(num_classes, np.float32),
    }


def classification_logits(t, params: dict, c5):
    """Global average pool of C5 (NxDxHxW) then a linear layer: N x num_classes."""
    pooled = t.op("mean", c5, axis=(2, 3))
    return t.op("linear", pooled, params["cls_pretrain.weight"], params["cls_pretrain.bias"])
