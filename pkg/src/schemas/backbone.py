import math
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

C5Mode = Literal["standard", "dilated"]

STAGE_NAMES = ("stem", "res2", "res3", "res4", "res5")


class BackboneConfig(BaseModel):
    """
    Residual ConvNet geometry.

    Stage 0 is the stem (7x7 conv + 3x3 max pool when stem_stride is 4);
    stages 1-4 are the residual stages C2..C5, whose strides come from
    ``stage_strides``. C4 ends at stride 16 and C5 at stride 32 (16 dilated).
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    stage_channels: list[int] = Field(default_factory=lambda: [8, 16, 32, 64, 128])
    blocks_per_stage: list[int] = Field(default_factory=lambda: [1, 1, 1, 1, 1])
    stem_stride: Literal[1, 2, 4] = 4
    stage_strides: list[int] = Field(default_factory=lambda: [1, 2, 2, 2])
    c5_mode: C5Mode = "standard"

    @model_validator(mode="after")
    def check_geometry(self) -> "BackboneConfig":
        if len(self.stage_channels) != 5 or len(self.blocks_per_stage) != 5:
            raise ValueError("stage_channels and blocks_per_stage need 5 entries (stem, C2..C5)")
        if len(self.stage_strides) != 4:
            raise ValueError("stage_strides needs 4 entries (C2..C5)")
        if any(c <= 0 for c in self.stage_channels):
            raise ValueError(f"every stage needs at least one channel, got {self.stage_channels}")
        if self.blocks_per_stage[0] != 1 or any(b < 1 for b in self.blocks_per_stage):
            raise ValueError("the stem has exactly one block and every stage at least one")
        if any(s not in (1, 2) for s in self.stage_strides):
            raise ValueError("stage strides must be 1 or 2")
        if self.stem_stride * math.prod(self.stage_strides[:3]) != 16:
            raise ValueError("stride through C4 must be 16")
        if self.c5_stride("standard") != 32:
            raise ValueError("stride through C5 must be 32 in standard mode")
        if self.stage_strides[3] != 2:
            raise ValueError("C5 must carry the final stride-2 layer (needed by the dilation conversion)")
        return self

    @property
    def c4_channels(self) -> int:
        return self.stage_channels[3]

    @property
    def c5_channels(self) -> int:
        return self.stage_channels[4]

    def c5_stride(self, mode: C5Mode | None = None) -> int:
        mode = mode or self.c5_mode
        c5 = self.stage_strides[3] if mode == "standard" else 1
        return self.stem_stride * math.prod(self.stage_strides[:3]) * c5
