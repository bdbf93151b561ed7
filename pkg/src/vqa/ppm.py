import numpy as np

from src.core.errors import ShapeError
from src.kernels import value_of
from src.schemas.vqa import PPMConfig


def build_ppm(in_channels: int, config: PPMConfig, seed: int) -> dict[str, np.ndarray]:
    """One bias-free 1x1 conv + frozen BN per pool size."""
    rng = np.random.default_rng(seed)
    weights = {}
    for i, _ in enumerate(config.pool_sizes):
        std = np.sqrt(2.0 / in_channels)
        weights[f"ppm.{i}.conv.weight"] = (rng.standard_normal((config.proj_dim, in_channels, 1, 1)) * std).astype(np.float32)
        weights[f"ppm.{i}.bn.gamma"] = np.ones(config.proj_dim, np.float32)
        weights[f"ppm.{i}.bn.beta"] = np.zeros(config.proj_dim, np.float32)
        weights[f"ppm.{i}.bn.mean"] = np.zeros(config.proj_dim, np.float32)
        weights[f"ppm.{i}.bn.var"] = np.ones(config.proj_dim, np.float32)
    return weights


def ppm(t, params: dict, grid_map, config: PPMConfig):
    """
    Pyramid pooling over a CxGHxGW (or BxCxGHxGW) map.

    Each branch adaptive-average-pools to s x s, projects to ``proj_dim`` with
    a 1x1 conv + BN + ReLU and is upsampled (nearest) back to GH x GW; the
    input and every branch are concatenated along channels.

    Raises:
        ShapeError: If the grid is smaller than the largest pool size.
    """
    shape = value_of(grid_map).shape
    gh, gw = shape[-2:]
    largest = max(config.pool_sizes)
    if gh < largest or gw < largest:
        raise ShapeError(f"grid {gh}x{gw} is smaller than the largest pool size {largest}")
    channel_axis = len(shape) - 3
    branches = [grid_map]
    for i, size in enumerate(config.pool_sizes):
        x = t.op("adaptive_avg_pool2d", grid_map, out_h=size, out_w=size)
        x = t.op("conv2d", x, params[f"ppm.{i}.conv.weight"])
        x = t.op(
            "batchnorm_infer", x,
            params[f"ppm.{i}.bn.mean"], params[f"ppm.{i}.bn.var"], params[f"ppm.{i}.bn.gamma"], params[f"ppm.{i}.bn.beta"],
        )
        x = t.op("relu", x)
        branches.append(t.op("upsample_nearest", x, out_h=gh, out_w=gw))
    return t.op("concat", *branches, axis=channel_axis)
