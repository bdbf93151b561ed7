from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

PipelineKind = Literal["region", "grid"]

STANDARD_INPUT_SIZES: list[tuple[int, int]] = [(448, 448), (448, 746), (600, 1000), (800, 1333)]


class BenchConfig(BaseModel):
    """Timing protocol and sweep grids."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    reps: int = Field(default=10, ge=3)
    warmup: int = Field(default=2, ge=1)
    image_height: int = Field(default=600, ge=32)
    image_width: int = Field(default=1000, ge=32)
    num_images: int = Field(default=1, ge=1)
    num_features: list[int] = Field(default_factory=lambda: [30, 50, 100, 200])
    input_sizes: list[tuple[int, int]] = Field(default_factory=lambda: list(STANDARD_INPUT_SIZES))
    pretrain_modes: list[Literal["classification", "detection", "detection_attributes"]] = Field(
        default_factory=lambda: ["classification", "detection", "detection_attributes"]
    )
    attr_weights: list[float] = Field(default_factory=lambda: [0.0, 0.1, 0.2, 0.5, 1.0])
    class_counts: list[int] = Field(default_factory=lambda: [16, 256, 1600])
    seeds: list[int] = Field(default_factory=lambda: [0, 1, 2])
    pretrain_iterations: int = Field(default=600, gt=0)
    pretrain_batch_size: int = Field(default=2, gt=0)
    vqa_iterations: int = Field(default=1500, gt=0)
    vqa_batch_size: int = Field(default=64, gt=0)
    e2e_iterations: int = Field(default=300, gt=0)
    e2e_batch_size: int = Field(default=8, gt=0)


class StageTimings(BaseModel):
    """Median milliseconds per image for each stage of one pipeline."""
    model_config = ConfigDict(extra="forbid")

    pipeline: PipelineKind
    shared_conv_ms: float
    region_feat_ms: float = 0.0
    region_select_ms: float = 0.0
    vqa_ms: float
    total_ms: float
    num_features: int
    num_classes: int
    fingerprint: str
    repetitions: int
    threads: int

    @property
    def region_share(self) -> float:
        """Fraction of total time spent in region feature computation and selection."""
        return (self.region_feat_ms + self.region_select_ms) / self.total_ms if self.total_ms else 0.0


class SweepRow(BaseModel):
    """One swept value of one experiment; flat so it serializes to a CSV row."""
    model_config = ConfigDict(extra="forbid")

    sweep: str
    value: str
    pipeline: str
    seed: int
    num_features: int
    accuracy: float | None = None
    region_ms: float | None = None
    total_ms: float | None = None
    status: str = "ok"
    detail: str = ""

    @property
    def key(self) -> tuple[str, str, str, int]:
        return self.sweep, self.value, self.pipeline, self.seed
