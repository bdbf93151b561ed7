from pydantic import BaseModel, ConfigDict, Field, model_validator

TEMPLATE_VERSION = "v1"


class AugmentPolicy(BaseModel):
    """
    Ranges (low, high) sampled uniformly per image.

    brightness / contrast are relative factors (0.1 = +10 %), rotation is in
    degrees, translate is a fraction of the image extent.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    brightness: tuple[float, float] = (0.0, 0.0)
    contrast: tuple[float, float] = (0.0, 0.0)
    rotation: tuple[float, float] = (0.0, 0.0)
    translate: tuple[float, float] = (0.0, 0.0)

    @model_validator(mode="after")
    def check_bounds(self) -> "AugmentPolicy":
        bounds = {"brightness": 0.2, "contrast": 0.2, "rotation": 10.0, "translate": 0.05}
        for name, bound in bounds.items():
            low, high = getattr(self, name)
            if low > high or abs(low) > bound or abs(high) > bound:
                raise ValueError(f"{name} range {(low, high)} must be ordered and within +-{bound}")
        return self

    @property
    def is_identity(self) -> bool:
        return all(getattr(self, n) == (0.0, 0.0) for n in ("brightness", "contrast", "rotation", "translate"))

    @classmethod
    def default_train(cls) -> "AugmentPolicy":
        return cls(brightness=(-0.2, 0.2), contrast=(-0.2, 0.2), rotation=(-10.0, 10.0), translate=(-0.05, 0.05))


class DataConfig(BaseModel):
    """Synthetic shapes world and image resizing."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    canvas_size: int = Field(default=128, ge=32)
    min_object_size: int = Field(default=12, gt=2)
    max_object_size: int = Field(default=28, gt=2)
    min_separation: float = Field(default=16.0, ge=0.0)
    difficulty: int = Field(default=8, ge=1, le=8)
    questions_per_scene: int = Field(default=4, ge=1)
    n_train: int = Field(default=2000, gt=0)
    n_val: int = Field(default=200, gt=0)
    n_test: int = Field(default=500, gt=0)
    resize_short: int = Field(default=600, gt=0)
    resize_long: int = Field(default=1000, gt=0)
    augment: AugmentPolicy = Field(default_factory=AugmentPolicy)

    @model_validator(mode="after")
    def check_sizes(self) -> "DataConfig":
        if self.min_object_size > self.max_object_size:
            raise ValueError("min_object_size must not exceed max_object_size")
        if self.max_object_size > self.canvas_size // 2:
            raise ValueError("objects must fit comfortably inside the canvas")
        if self.resize_short > self.resize_long:
            raise ValueError("resize_short must not exceed resize_long")
        return self


class SplitInfo(BaseModel):
    model_config = ConfigDict(extra="forbid")

    seed: int
    count: int


class Manifest(BaseModel):
    """Everything needed to regenerate a dataset byte for byte."""
    model_config = ConfigDict(extra="forbid")

    seed: int
    template_version: str = TEMPLATE_VERSION
    splits: dict[str, SplitInfo]
    data: DataConfig
