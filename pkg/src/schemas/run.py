from pydantic import BaseModel, ConfigDict, Field

from src.schemas.backbone import BackboneConfig
from src.schemas.bench import BenchConfig
from src.schemas.data import DataConfig
from src.schemas.detector import DetectorConfig
from src.schemas.vqa import VqaConfig


class RunConfig(BaseModel):
    """The fully resolved configuration of one CLI run."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    seed: int = 0
    backbone: BackboneConfig = Field(default_factory=BackboneConfig)
    detector: DetectorConfig = Field(default_factory=DetectorConfig)
    vqa: VqaConfig = Field(default_factory=VqaConfig)
    data: DataConfig = Field(default_factory=DataConfig)
    bench: BenchConfig = Field(default_factory=BenchConfig)
