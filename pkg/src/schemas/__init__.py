from src.schemas.backbone import BackboneConfig, STAGE_NAMES
from src.schemas.detector import DetectorConfig, RegionHeadConfig, RpnConfig
from src.schemas.vqa import PPMConfig, Schedule, VqaConfig, Vocabulary
from src.schemas.data import AugmentPolicy, DataConfig, Manifest
from src.schemas.bench import BenchConfig, StageTimings, SweepRow
from src.schemas.run import RunConfig

__all__ = [
    "BackboneConfig",
    "STAGE_NAMES",
    "DetectorConfig",
    "RegionHeadConfig",
    "RpnConfig",
    "PPMConfig",
    "Schedule",
    "VqaConfig",
    "Vocabulary",
    "AugmentPolicy",
    "DataConfig",
    "Manifest",
    "BenchConfig",
    "StageTimings",
    "SweepRow",
    "RunConfig",
]
