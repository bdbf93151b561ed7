import numpy as np
from PIL import Image

from src.schemas.data import AugmentPolicy


def border_color(image: np.ndarray) -> tuple[int, int, int]:
    """Most common color on the image border (the background of a synthetic scene)."""
    border = np.concatenate([image[0], image[-1], image[:, 0], image[:, -1]]).reshape(-1, 3)
    colors, counts = np.unique(border, axis=0, return_counts=True)
    return tuple(int(c) for c in colors[counts.argmax()])


def jitter(image: np.ndarray, brightness: float, contrast: float) -> np.ndarray:
    """Scale by (1 + brightness), then stretch around the mean by (1 + contrast); clamp to [0, 255]."""
    out = image.astype(np.float64)
    if brightness:
        out = out * (1.0 + brightness)
    if contrast:
        mean = out.mean()
        out = mean + (out - mean) * (1.0 + contrast)
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def augment(image: np.ndarray, seed: int, policy: AugmentPolicy, background: tuple[int, int, int] | None = None) -> np.ndarray:
    """
    Color jitter and a small affine warp, deterministic under ``seed``.

    Rotation is about the image center; pixels shifted in from outside take
    the background color. The output keeps the input extents.

    Args:
        image (np.ndarray): HxWx3 uint8.
        seed (int): Seed of the sampled factors.
        policy (AugmentPolicy): Ranges of every factor.
        background: Fill color; defaults to the dominant border color.
    """
    if policy.is_identity:
        return image.copy()
    rng = np.random.default_rng(seed)
    brightness = rng.uniform(*policy.brightness)
    contrast = rng.uniform(*policy.contrast)
    angle = rng.uniform(*policy.rotation)
    tx, ty = rng.uniform(*policy.translate, size=2)
    height, width = image.shape[:2]
    out = image
    if angle or tx or ty:
        fill = background or border_color(image)
        warped = Image.fromarray(image).rotate(
            angle,
            resample=Image.Resampling.NEAREST,
            translate=(round(tx * width), round(ty * height)),
            fillcolor=fill,
        )
        out = np.asarray(warped, dtype=np.uint8)
    return jitter(out, brightness, contrast)
