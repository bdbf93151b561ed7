import io
import logging
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from src.core.errors import FormatError
from src.utils.io import write_bytes

logger = logging.getLogger(__name__)


def encode_ppm(image: np.ndarray) -> bytes:
    """HxWx3 uint8 -> binary PPM (P6)."""
    if image.ndim != 3 or image.shape[2] != 3 or image.dtype != np.uint8:
        raise FormatError(f"PPM images are HxWx3 uint8, got {image.shape} {image.dtype}")
    buffer = io.BytesIO()
    Image.fromarray(image).save(buffer, format="PPM")
    return buffer.getvalue()


def encode_pgm(gray: np.ndarray) -> bytes:
    """HxW uint8 -> binary PGM (P5)."""
    if gray.ndim != 2 or gray.dtype != np.uint8:
        raise FormatError(f"PGM images are HxW uint8, got {gray.shape} {gray.dtype}")
    buffer = io.BytesIO()
    Image.fromarray(gray).save(buffer, format="PPM")
    return buffer.getvalue()


def save_ppm(image: np.ndarray, path: str | Path) -> None:
    write_bytes(path, encode_ppm(image))


def save_pgm(gray: np.ndarray, path: str | Path) -> None:
    write_bytes(path, encode_pgm(gray))


def heatmap_to_gray(heatmap: np.ndarray) -> np.ndarray:
    """[0, 1] floats -> uint8 with 1.0 mapped to 255."""
    return np.clip(np.rint(np.asarray(heatmap, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)


def load_image(path: str | Path) -> np.ndarray:
    """
    Read any image Pillow understands (PPM/PGM included) as HxWx3 uint8.

    Raises:
        FormatError: If the file is missing or not a readable image.
    """
    path = Path(path)
    try:
        with Image.open(path) as image:
            return np.asarray(image.convert("RGB"), dtype=np.uint8).copy()
    except (FileNotFoundError, UnidentifiedImageError, OSError) as e:
        raise FormatError(f"cannot read image {path}: {e}") from e


def load_gray(path: str | Path) -> np.ndarray:
    path = Path(path)
    try:
        with Image.open(path) as image:
            return np.asarray(image.convert("L"), dtype=np.uint8).copy()
    except (FileNotFoundError, UnidentifiedImageError, OSError) as e:
        raise FormatError(f"cannot read image {path}: {e}") from e
