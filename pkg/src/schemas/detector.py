from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

HeadMode = Literal["c5_14x14", "fc2_1x1"]


class RpnConfig(BaseModel):
    """Anchors, proposal filtering and training-time anchor sampling."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    anchor_scales: list[float] = Field(default_factory=lambda: [32.0, 64.0, 128.0, 256.0, 512.0])
    anchor_ratios: list[float] = Field(default_factory=lambda: [0.5, 1.0, 2.0])
    channels: int = Field(default=64, gt=0)
    pre_nms_topk: int = Field(default=6000, gt=0)
    post_nms_topk: int = Field(default=300, gt=0)
    nms_iou: float = Field(default=0.7, ge=0.0, le=1.0)
    score_thresh: float = Field(default=0.0, ge=0.0, le=1.0)
    batch_size_per_image: int = Field(default=256, gt=0)
    positive_fraction: float = Field(default=0.5, ge=0.0, le=1.0)
    fg_iou: float = Field(default=0.7, ge=0.0, le=1.0)
    bg_iou: float = Field(default=0.3, ge=0.0, le=1.0)

    @property
    def num_anchors(self) -> int:
        return len(self.anchor_scales) * len(self.anchor_ratios)


class RegionHeadConfig(BaseModel):
    """
    Per-region head.

    ``c5_14x14`` pools 14x14 from C4 and runs the C5 stage per region;
    ``fc2_1x1`` pools 1x1 from the (dilated) C5 map and applies two fc layers.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    mode: HeadMode = "c5_14x14"
    pool_size: int = 14
    fc_dim: int = Field(default=1024, gt=0)
    pool_reduction: Literal["max", "mean"] = "max"
    attr_hidden: int = Field(default=512, gt=0)
    roi_batch_size: int = Field(default=64, gt=0)
    fg_fraction: float = Field(default=0.25, ge=0.0, le=1.0)
    fg_iou: float = Field(default=0.5, ge=0.0, le=1.0)

    @model_validator(mode="before")
    @classmethod
    def default_pool_size(cls, data):
        if isinstance(data, dict) and data.get("pool_size") is None:
            data = {**data, "pool_size": 14 if data.get("mode", "c5_14x14") == "c5_14x14" else 1}
        return data

    @model_validator(mode="after")
    def check_pool_size(self) -> "RegionHeadConfig":
        expected = 14 if self.mode == "c5_14x14" else 1
        if self.pool_size != expected:
            raise ValueError(f"head mode {self.mode} requires pool_size {expected}, got {self.pool_size}")
        return self


class DetectorConfig(BaseModel):
    """Defaults follow the VG setup: 1600 classes, 400 attributes, N=100, attribute weight 0.5."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    num_classes: int = Field(default=1600, gt=0)
    num_attributes: int = Field(default=400, gt=0)
    num_regions: int = Field(default=100, ge=1)
    class_nms_iou: float = Field(default=0.3, ge=0.0, le=1.0)
    select_score_thresh: float = Field(default=0.0, ge=0.0, le=1.0)
    attr_weight: float = Field(default=0.5, ge=0.0)
    rpn: RpnConfig = Field(default_factory=RpnConfig)
    head: RegionHeadConfig = Field(default_factory=RegionHeadConfig)
