from src.backbone.resnet import (
    build_backbone,
    build_classifier,
    classification_logits,
    forward,
    forward_c5,
    forward_to_c4,
    grid_count,
    grid_features,
    is_trainable,
)
from src.backbone.preprocess import resize_fixed, resize_shortest, to_batch, to_tensor

__all__ = [
    "build_backbone",
    "build_classifier",
    "classification_logits",
    "forward",
    "forward_c5",
    "forward_to_c4",
    "grid_count",
    "grid_features",
    "is_trainable",
    "resize_fixed",
    "resize_shortest",
    "to_batch",
    "to_tensor",
]
