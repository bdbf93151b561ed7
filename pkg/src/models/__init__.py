from src.models.box import Box, Detection, GroundTruth
from src.models.feature_set import FeatureSet
from src.models.scene import COLORS, SHAPES, QAPair, SceneObject, SceneSpec

__all__ = ["Box", "Detection", "GroundTruth", "FeatureSet", "COLORS", "SHAPES", "QAPair", "SceneObject", "SceneSpec"]
