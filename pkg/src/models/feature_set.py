from dataclasses import dataclass
from typing import Literal

import numpy as np

from src.core.errors import ShapeError

FeatureKind = Literal["region", "grid"]


@dataclass(frozen=True, eq=False)
class FeatureSet:
    """
    N visual feature vectors of dimension D, as a VQA model consumes them.

    Region sets carry one box per row and may be zero-padded (mask false).
    Grid sets are a row-major flattening of a DxGHxGW map: row i is cell
    (i // GW, i % GW), and every row is real.
    """
    kind: FeatureKind
    vectors: np.ndarray
    mask: np.ndarray
    image_size: tuple[int, int]
    boxes: np.ndarray | None = None
    grid_shape: tuple[int, int, int] | None = None

    def __post_init__(self):
        if self.vectors.ndim != 2:
            raise ShapeError(f"feature vectors must be NxD, got {self.vectors.shape}")
        n = self.vectors.shape[0]
        if self.mask.shape != (n,):
            raise ShapeError(f"mask shape {self.mask.shape} != ({n},)")
        if self.kind == "region":
            if self.boxes is None or self.boxes.shape != (n, 4):
                raise ShapeError(f"region set needs {n}x4 boxes, got {None if self.boxes is None else self.boxes.shape}")
        elif self.kind == "grid":
            if self.grid_shape is None:
                raise ShapeError("grid set needs (grid_h, grid_w, stride)")
            gh, gw, _ = self.grid_shape
            if gh * gw != n:
                raise ShapeError(f"grid {gh}x{gw} does not match {n} rows")
            if not self.mask.all():
                raise ShapeError("grid feature masks are all true")
        else:
            raise ShapeError(f"unknown feature kind {self.kind!r}")

    @property
    def num_features(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @classmethod
    def from_regions(cls, vectors, boxes, mask, image_size: tuple[int, int]) -> "FeatureSet":
        """
        Stack selected region vectors with their boxes.

        Raises:
            ShapeError: If rows, boxes and mask disagree in length.
        """
        vectors = np.ascontiguousarray(vectors, dtype=np.float32)
        boxes = np.ascontiguousarray(boxes, dtype=np.float32).reshape(-1, 4)
        mask = np.asarray(mask, dtype=bool)
        if not (len(vectors) == len(boxes) == len(mask)):
            raise ShapeError(f"{len(vectors)} vectors, {len(boxes)} boxes and {len(mask)} mask entries")
        vectors = np.where(mask[:, None], vectors, 0).astype(np.float32)
        return cls("region", vectors, mask, tuple(image_size), boxes=boxes)

    @classmethod
    def from_grid(cls, grid_map, stride: int, image_size: tuple[int, int]) -> "FeatureSet":
        grid_map = np.asarray(grid_map, dtype=np.float32)
        if grid_map.ndim != 3:
            raise ShapeError(f"grid map must be DxGHxGW, got {grid_map.shape}")
        depth, gh, gw = grid_map.shape
        vectors = np.ascontiguousarray(grid_map.reshape(depth, gh * gw).T)
        return cls("grid", vectors, np.ones(gh * gw, dtype=bool), tuple(image_size), grid_shape=(gh, gw, int(stride)))

    def to_grid_map(self) -> np.ndarray:
        """Undo ``from_grid``: the DxGHxGW map."""
        if self.kind != "grid":
            raise ShapeError("only grid sets have a map layout")
        gh, gw, _ = self.grid_shape
        return np.ascontiguousarray(self.vectors.T.reshape(self.dim, gh, gw))

    def cell_boxes(self) -> np.ndarray:
        """Pixel boxes of the rows: region boxes, or stride x stride grid cells clipped to the image."""
        if self.kind == "region":
            return self.boxes.astype(np.float64)
        gh, gw, stride = self.grid_shape
        height, width = self.image_size
        rows, cols = np.divmod(np.arange(gh * gw), gw)
        return np.stack([
            cols * stride,
            rows * stride,
            np.minimum((cols + 1) * stride, width),
            np.minimum((rows + 1) * stride, height),
        ], axis=1).astype(np.float64)

    def truncate_or_pad(self, n: int) -> "FeatureSet":
        """
        Exactly ``n`` rows: keep the first n, or append zero rows with mask false.

        Only region sets can be padded; a grid set keeps its natural size.
        """
        if n < 1:
            raise ShapeError(f"feature count must be >= 1, got {n}")
        if self.kind == "grid":
            return self
        current = self.num_features
        if n <= current:
            return FeatureSet.from_regions(self.vectors[:n], self.boxes[:n], self.mask[:n], self.image_size)
        extra = n - current
        return FeatureSet.from_regions(
            np.concatenate([self.vectors, np.zeros((extra, self.dim), np.float32)]),
            np.concatenate([self.boxes, np.zeros((extra, 4), np.float32)]),
            np.concatenate([self.mask, np.zeros(extra, bool)]),
            self.image_size,
        )

    def __repr__(self):
        return f"<FeatureSet {self.kind} N={self.num_features} D={self.dim} real={int(self.mask.sum())}>"
