from src.data.augment import augment
from src.data.dataset import (
    SPLITS,
    SceneRecord,
    build_vocabulary,
    export_dataset,
    load_manifest,
    load_split,
    load_vocabulary,
    regenerate,
    save_vocabulary,
)
from src.data.questions import QUESTION_TYPES, derive_answer, gen_questions, majority_baseline, tokenize
from src.data.scenes import RenderedScene, gen_scene, render_scene

__all__ = [
    "augment",
    "SPLITS",
    "SceneRecord",
    "build_vocabulary",
    "export_dataset",
    "load_manifest",
    "load_split",
    "load_vocabulary",
    "regenerate",
    "save_vocabulary",
    "QUESTION_TYPES",
    "derive_answer",
    "gen_questions",
    "majority_baseline",
    "tokenize",
    "RenderedScene",
    "gen_scene",
    "render_scene",
]
