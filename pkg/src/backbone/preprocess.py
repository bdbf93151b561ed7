import numpy as np
from PIL import Image

from src.core.errors import ShapeError

# per-channel RGB statistics on the 0..255 scale
PIXEL_MEAN = np.array([123.675, 116.28, 103.53], dtype=np.float32)
PIXEL_STD = np.array([58.395, 57.12, 57.375], dtype=np.float32)


def resize_scale(height: int, width: int, short: int = 600, long: int = 1000) -> float:
    """
    Scale that brings the shorter side to ``short`` unless the longer side
    would then exceed ``long``, in which case the longer side is capped.
    """
    scale = short / min(height, width)
    if round(max(height, width) * scale) > long:
        scale = long / max(height, width)
    return scale


def resize_shortest(image: np.ndarray, short: int = 600, long: int = 1000) -> tuple[np.ndarray, float]:
    """Aspect-preserving bilinear resize of an HxWx3 uint8 image; returns (image, scale)."""
    height, width = image.shape[:2]
    scale = resize_scale(height, width, short, long)
    size = (max(1, round(height * scale)), max(1, round(width * scale)))
    return resize_fixed(image, size), scale


def resize_fixed(image: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    """Resize to exactly (H, W), discarding the aspect ratio."""
    if image.ndim != 3 or image.dtype != np.uint8:
        raise ShapeError(f"expected an HxWx3 uint8 image, got {image.shape} {image.dtype}")
    height, width = size
    if (height, width) == image.shape[:2]:
        return image.copy()
    resized = Image.fromarray(image).resize((width, height), Image.Resampling.BILINEAR)
    return np.asarray(resized, dtype=np.uint8).copy()


def to_tensor(image: np.ndarray) -> np.ndarray:
    """HxWx3 uint8 -> normalized float32 3xHxW."""
    if image.ndim != 3 or image.shape[2] != 3:
        raise ShapeError(f"expected an HxWx3 image, got {image.shape}")
    normalized = (image.astype(np.float32) - PIXEL_MEAN) / PIXEL_STD
    return np.ascontiguousarray(normalized.transpose(2, 0, 1))


def to_batch(images: list[np.ndarray]) -> np.ndarray:
    """Stack equally sized HxWx3 images into Nx3xHxW."""
    return np.stack([to_tensor(image) for image in images])
