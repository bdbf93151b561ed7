"""
Synthetic shapes world.

Scenes are flat-shaded (no anti-aliasing) shapes on a plain background. Every
shape is also drawn alone onto a mask, and its ground-truth box is the mask's
bounding box, so boxes bound the drawn pixels exactly.
"""
from dataclasses import dataclass
import logging

import numpy as np
from PIL import Image, ImageDraw

from src.core.errors import PlacementError
from src.models.box import Box
from src.models.scene import COLORS, SHAPES, SceneObject, SceneSpec
from src.schemas.data import DataConfig

logger = logging.getLogger(__name__)

COLOR_RGB: dict[str, tuple[int, int, int]] = {
    "red": (220, 40, 40),
    "green": (40, 180, 60),
    "blue": (50, 80, 220),
    "yellow": (230, 210, 40),
}
BACKGROUNDS: tuple[tuple[int, int, int], ...] = ((24, 24, 24), (96, 96, 96), (160, 150, 140))
MAX_PLACEMENT_TRIES = 200


@dataclass(frozen=True, eq=False)
class RenderedScene:
    spec: SceneSpec
    image: np.ndarray  # HxWx3 uint8


def shape_extent(shape: str, size: int) -> tuple[int, int]:
    """(width, height) in pixels of a shape of nominal ``size``."""
    if shape == "bar":
        return size, max(size // 3, 3)
    return size, size


def _draw(draw: ImageDraw.ImageDraw, shape: str, left: int, top: int, width: int, height: int, fill) -> None:
    right, bottom = left + width - 1, top + height - 1
    if shape == "circle":
        draw.ellipse([left, top, right, bottom], fill=fill)
    elif shape == "triangle":
        draw.polygon([(left, bottom), (right, bottom), ((left + right) / 2, top)], fill=fill)
    else:
        draw.rectangle([left, top, right, bottom], fill=fill)


def render_scene(spec: SceneSpec) -> RenderedScene:
    """
    Draw a scene and recompute each object's box from its own mask.

    The returned spec carries the tight boxes; objects that draw no pixel at
    all are impossible with the size bounds DataConfig enforces.
    """
    canvas = Image.new("RGB", (spec.width, spec.height), tuple(spec.background))
    draw = ImageDraw.Draw(canvas)
    objects = []
    for obj in spec.objects:
        width, height = shape_extent(obj.shape, int(obj.size))
        left = int(round(obj.center[0] - width / 2))
        top = int(round(obj.center[1] - height / 2))
        mask = Image.new("L", (spec.width, spec.height), 0)
        _draw(ImageDraw.Draw(mask), obj.shape, left, top, width, height, 255)
        x1, y1, x2, y2 = mask.getbbox()
        _draw(draw, obj.shape, left, top, width, height, COLOR_RGB[obj.color])
        objects.append(SceneObject(obj.shape, obj.color, obj.center, obj.size, Box(x1, y1, x2, y2)))
    spec = SceneSpec(spec.height, spec.width, tuple(objects), spec.background, spec.seed)
    return RenderedScene(spec, np.asarray(canvas, dtype=np.uint8).copy())


def _place(rng: np.random.Generator, config: DataConfig, placed: list[SceneObject]) -> SceneObject | None:
    shape = SHAPES[rng.integers(len(SHAPES))]
    color = COLORS[rng.integers(len(COLORS))]
    size = int(rng.integers(config.min_object_size, config.max_object_size + 1))
    width, height = shape_extent(shape, size)
    left = int(rng.integers(0, config.canvas_size - width + 1))
    top = int(rng.integers(0, config.canvas_size - height + 1))
    center = (left + width / 2, top + height / 2)
    for other in placed:
        if np.hypot(center[0] - other.center[0], center[1] - other.center[1]) < config.min_separation:
            return None
    placeholder = Box(left, top, left + width, top + height)
    return SceneObject(shape, color, center, size, placeholder)


def gen_scene(seed: int, config: DataConfig, difficulty: int | None = None) -> RenderedScene:
    """
    Generate and render one scene.

    Args:
        seed (int): Determines every byte of the result.
        config (DataConfig): Canvas, object size range and separation.
        difficulty (int | None): Maximum object count (1..8); the count is
            uniform in [1, difficulty]. Defaults to ``config.difficulty``.

    Raises:
        PlacementError: If an object cannot be placed within the retry budget.
    """
    difficulty = difficulty or config.difficulty
    if not 1 <= difficulty <= 8:
        raise PlacementError(f"difficulty must be in [1, 8], got {difficulty}")
    rng = np.random.default_rng(seed)
    count = int(rng.integers(1, difficulty + 1))
    background = BACKGROUNDS[rng.integers(len(BACKGROUNDS))]
    placed: list[SceneObject] = []
    for index in range(count):
        for _ in range(MAX_PLACEMENT_TRIES):
            obj = _place(rng, config, placed)
            if obj is not None:
                placed.append(obj)
                break
        else:
            raise PlacementError(
                f"seed {seed}: could not place object {index + 1} of {count} "
                f"after {MAX_PLACEMENT_TRIES} tries"
            )
    spec = SceneSpec(config.canvas_size, config.canvas_size, tuple(placed), background, seed)
    return render_scene(spec)
