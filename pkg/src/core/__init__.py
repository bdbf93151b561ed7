from src.core.errors import (
    GridFeatError,
    ConfigError,
    ShapeError,
    NonFiniteError,
    FormatError,
    UnsupportedVersionError,
    LabelError,
    PlacementError,
    PipelineError,
    TrainingError,
    InvalidArgumentError,
    UnknownOpError,
)

__all__ = [
    "GridFeatError",
    "ConfigError",
    "ShapeError",
    "NonFiniteError",
    "FormatError",
    "UnsupportedVersionError",
    "LabelError",
    "PlacementError",
    "PipelineError",
    "TrainingError",
    "InvalidArgumentError",
    "UnknownOpError",
]
