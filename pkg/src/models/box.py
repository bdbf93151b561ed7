from dataclasses import dataclass, field
import math

import numpy as np

from src.core.errors import InvalidArgumentError


@dataclass(frozen=True)
class Box:
    """Pixel-space rectangle (x1, y1) top-left, (x2, y2) bottom-right, continuous coordinates."""
    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        values = (self.x1, self.y1, self.x2, self.y2)
        if not all(math.isfinite(v) for v in values):
            raise InvalidArgumentError(f"box coordinates must be finite, got {values}")
        if self.x2 < self.x1 or self.y2 < self.y1:
            raise InvalidArgumentError(f"box must satisfy x2 >= x1 and y2 >= y1, got {values}")

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.y1, self.x2, self.y2], dtype=np.float64)

    @classmethod
    def from_array(cls, values) -> "Box":
        x1, y1, x2, y2 = (float(v) for v in values)
        return cls(x1, y1, x2, y2)

    def __repr__(self):
        return f"<Box ({self.x1:.1f}, {self.y1:.1f}, {self.x2:.1f}, {self.y2:.1f})>"


@dataclass(frozen=True)
class Detection:
    """A scored, classified box with per-attribute probabilities."""
    box: Box
    class_id: int
    score: float
    attribute_scores: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.float32), compare=False)

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise InvalidArgumentError(f"detection score must lie in [0, 1], got {self.score}")
        if self.class_id < 0:
            raise InvalidArgumentError(f"class id must be non-negative, got {self.class_id}")
        attrs = np.asarray(self.attribute_scores)
        if attrs.size and (attrs.min() < 0 or attrs.max() > 1):
            raise InvalidArgumentError("attribute scores must lie in [0, 1]")

    def to_dict(self) -> dict:
        return {
            "box": [self.box.x1, self.box.y1, self.box.x2, self.box.y2],
            "class_id": self.class_id,
            "score": self.score,
            "attribute_id": int(np.argmax(self.attribute_scores)) if np.size(self.attribute_scores) else None,
        }


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """Annotated objects of one image: Nx4 boxes, class ids and attribute ids."""
    boxes: np.ndarray
    class_ids: np.ndarray
    attribute_ids: np.ndarray

    def __post_init__(self):
        n = len(self.class_ids)
        if np.shape(self.boxes) != (n, 4) or len(self.attribute_ids) != n:
            raise InvalidArgumentError(
                f"ground truth needs matching boxes/classes/attributes, got {np.shape(self.boxes)}, {n}, {len(self.attribute_ids)}"
            )

    def __len__(self) -> int:
        return len(self.class_ids)

    @classmethod
    def empty(cls) -> "GroundTruth":
        return cls(np.zeros((0, 4)), np.zeros(0, np.int64), np.zeros(0, np.int64))
