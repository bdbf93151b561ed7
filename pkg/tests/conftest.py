import os

import numpy as np
import pytest

# Settings are read at import time; keep runs single-threaded and quiet
os.environ.setdefault("GRIDFEAT_THREADS", "1")
os.environ.setdefault("GRIDFEAT_LOG_LEVEL", "WARNING")

from src.data.dataset import export_dataset
from src.schemas.backbone import BackboneConfig
from src.schemas.bench import BenchConfig
from src.schemas.data import DataConfig
from src.schemas.detector import DetectorConfig, RegionHeadConfig, RpnConfig
from src.schemas.run import RunConfig
from src.schemas.vqa import PPMConfig, VqaConfig


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator; every test gets the same stream."""
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_backbone() -> BackboneConfig:
    return BackboneConfig(stage_channels=[4, 4, 8, 8, 8])


@pytest.fixture
def tiny_detector() -> DetectorConfig:
    """4 classes, 4 attributes, small anchors and a 1x1 RoIPool head."""
    return DetectorConfig(
        num_classes=4,
        num_attributes=4,
        num_regions=6,
        rpn=RpnConfig(anchor_scales=[16.0, 32.0], channels=8, pre_nms_topk=200, post_nms_topk=30,
                      batch_size_per_image=32),
        head=RegionHeadConfig(mode="fc2_1x1", fc_dim=16, attr_hidden=8, roi_batch_size=16),
    )


@pytest.fixture
def tiny_vqa() -> VqaConfig:
    return VqaConfig(embed_dim=8, question_dim=8, attention_hidden=8, classifier_hidden=8,
                     ppm=PPMConfig(enabled=False, pool_sizes=[1, 2], proj_dim=4))


@pytest.fixture
def tiny_data() -> DataConfig:
    return DataConfig(canvas_size=64, min_object_size=8, max_object_size=16, min_separation=8.0, difficulty=3,
                      questions_per_scene=3, n_train=6, n_val=2, n_test=4, resize_short=64, resize_long=64)


@pytest.fixture
def tiny_run(tiny_backbone, tiny_detector, tiny_vqa, tiny_data) -> RunConfig:
    """A complete run configuration small enough for unit tests."""
    bench = BenchConfig(reps=3, warmup=1, image_height=64, image_width=64, num_features=[2, 4], seeds=[0],
                        input_sizes=[(64, 64), (96, 96)], class_counts=[2, 4], pretrain_iterations=2,
                        pretrain_batch_size=2, vqa_iterations=3, vqa_batch_size=4, e2e_iterations=2, e2e_batch_size=2)
    return RunConfig(backbone=tiny_backbone, detector=tiny_detector, vqa=tiny_vqa, data=tiny_data, bench=bench)


@pytest.fixture
def tiny_dataset(tmp_path, tiny_data):
    """A freshly exported toy dataset directory."""
    root = tmp_path / "data"
    export_dataset(tiny_data, seed=7, out_dir=root)
    return root
