from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from src.models.box import Box, GroundTruth

SHAPES: tuple[str, ...] = ("circle", "square", "triangle", "bar")
COLORS: tuple[str, ...] = ("red", "green", "blue", "yellow")
QuestionType = Literal["existence", "color-query", "count", "spatial"]


@dataclass(frozen=True)
class SceneObject:
    shape: str
    color: str
    center: tuple[float, float]
    size: float
    box: Box

    @property
    def class_id(self) -> int:
        return SHAPES.index(self.shape)

    @property
    def attribute_id(self) -> int:
        return COLORS.index(self.color)

    def to_dict(self) -> dict:
        return {
            "shape": self.shape,
            "color": self.color,
            "center": list(self.center),
            "size": self.size,
            "box": [self.box.x1, self.box.y1, self.box.x2, self.box.y2],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SceneObject":
        return cls(
            shape=data["shape"],
            color=data["color"],
            center=tuple(data["center"]),
            size=data["size"],
            box=Box.from_array(data["box"]),
        )


@dataclass(frozen=True)
class SceneSpec:
    """A synthetic scene: what is drawn where, independent of its pixels."""
    height: int
    width: int
    objects: tuple[SceneObject, ...]
    background: tuple[int, int, int]
    seed: int

    def count(self, shape: str | None = None, color: str | None = None) -> int:
        return sum(
            1 for o in self.objects
            if (shape is None or o.shape == shape) and (color is None or o.color == color)
        )

    def ground_truth(self) -> GroundTruth:
        if not self.objects:
            return GroundTruth.empty()
        return GroundTruth(
            boxes=np.array([o.box.as_array() for o in self.objects]),
            class_ids=np.array([o.class_id for o in self.objects], dtype=np.int64),
            attribute_ids=np.array([o.attribute_id for o in self.objects], dtype=np.int64),
        )

    def to_dict(self) -> dict:
        return {
            "height": self.height,
            "width": self.width,
            "background": list(self.background),
            "seed": self.seed,
            "objects": [o.to_dict() for o in self.objects],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SceneSpec":
        return cls(
            height=data["height"],
            width=data["width"],
            objects=tuple(SceneObject.from_dict(o) for o in data["objects"]),
            background=tuple(data["background"]),
            seed=data["seed"],
        )


@dataclass(frozen=True)
class QAPair:
    """
    A templated question with its answer.

    ``query`` keeps the structured form the answer was computed from, e.g.
    ``{"shape": "circle", "color": "red"}`` for an existence question or
    ``{"a": {...}, "b": {...}}`` for a spatial one.
    """
    tokens: tuple[str, ...]
    answer: str
    qtype: QuestionType
    query: dict = field(default_factory=dict)

    @property
    def text(self) -> str:
        return " ".join(self.tokens)

    def to_dict(self) -> dict:
        return {"question": self.text, "answer": self.answer, "type": self.qtype, "query": self.query}

    @classmethod
    def from_dict(cls, data: dict) -> "QAPair":
        return cls(tokens=tuple(data["question"].split()), answer=data["answer"], qtype=data["type"], query=data["query"])
