"""
On-disk synthetic dataset.

Layout under the output directory::

    manifest.json              seeds, counts, template version, data config
    {split}.jsonl              one scene per line: boxes, classes, attributes, QA pairs
    images/{split}/{id}.ppm    P6 images

Image ids are ``{split}_{index:06d}``. Split seeds are spawned from the
dataset seed and scene seeds from the split seed, so the manifest alone
regenerates every byte.
"""
from dataclasses import dataclass
import logging
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from src.core.errors import FormatError, PipelineError
from src.data.questions import gen_questions
from src.data.scenes import gen_scene
from src.models.box import GroundTruth
from src.models.scene import QAPair, SceneSpec
from src.schemas.data import DataConfig, Manifest, SplitInfo
from src.schemas.vqa import Vocabulary
from src.utils.io import read_jsonl, write_bytes, write_jsonl
from src.utils.netpbm import encode_ppm, load_image
from src.utils.progress import progress

logger = logging.getLogger(__name__)

SPLITS: tuple[str, ...] = ("train", "val", "test")
MANIFEST_NAME = "manifest.json"


@dataclass(frozen=True, eq=False)
class SceneRecord:
    image_id: str
    split: str
    scene: SceneSpec
    questions: tuple[QAPair, ...]
    image_path: Path

    @property
    def ground_truth(self) -> GroundTruth:
        return self.scene.ground_truth()

    def load_image(self) -> np.ndarray:
        return load_image(self.image_path)

    def to_dict(self) -> dict:
        gt = self.ground_truth
        return {
            "image_id": self.image_id,
            "image": self.image_path.name,
            "boxes": gt.boxes.tolist(),
            "classes": gt.class_ids.tolist(),
            "attributes": gt.attribute_ids.tolist(),
            "scene": self.scene.to_dict(),
            "questions": [q.to_dict() for q in self.questions],
        }


def image_id(split: str, index: int) -> str:
    return f"{split}_{index:06d}"


def split_seeds(seed: int) -> dict[str, int]:
    children = np.random.SeedSequence(seed).spawn(len(SPLITS))
    return {split: int(child.generate_state(1)[0]) for split, child in zip(SPLITS, children)}


def scene_seeds(split_seed: int, index: int) -> tuple[int, int]:
    """(scene seed, question seed) of one image."""
    state = np.random.SeedSequence([split_seed, index]).generate_state(2)
    return int(state[0]), int(state[1])


def split_counts(config: DataConfig) -> dict[str, int]:
    return {"train": config.n_train, "val": config.n_val, "test": config.n_test}


def export_dataset(config: DataConfig, seed: int, out_dir: str | Path, verbose: bool = False) -> Manifest:
    """
    Generate and write every split.

    Args:
        config (DataConfig): Scene world, question count and split sizes.
        seed (int): Dataset seed; the manifest records it.
        out_dir (str | Path): Output directory (created if missing).

    Returns:
        Manifest: What was written.

    Raises:
        PlacementError: If some scene cannot be generated.
        PipelineError: If the directory is not writable.
    """
    out_dir = Path(out_dir)
    seeds = split_seeds(seed)
    counts = split_counts(config)
    try:
        for split in SPLITS:
            records = []
            for index in progress(range(counts[split]), verbose, desc=f"export {split}"):
                scene_seed, question_seed = scene_seeds(seeds[split], index)
                rendered = gen_scene(scene_seed, config)
                questions = gen_questions(rendered.spec, config.questions_per_scene, question_seed)
                name = image_id(split, index)
                path = out_dir / "images" / split / f"{name}.ppm"
                write_bytes(path, encode_ppm(rendered.image))
                records.append(SceneRecord(name, split, rendered.spec, tuple(questions), path))
            write_jsonl(out_dir / f"{split}.jsonl", (r.to_dict() for r in records))
            logger.info(f"Wrote {len(records)} {split} scenes to {out_dir}")
        manifest = Manifest(
            seed=seed,
            splits={split: SplitInfo(seed=seeds[split], count=counts[split]) for split in SPLITS},
            data=config,
        )
        write_bytes(out_dir / MANIFEST_NAME, (manifest.model_dump_json(indent=2) + "\n").encode())
    except OSError as e:
        raise PipelineError(f"cannot write dataset to {out_dir}: {e}") from e
    return manifest


def regenerate(manifest: Manifest, out_dir: str | Path, verbose: bool = False) -> Manifest:
    """Re-export a dataset from its manifest."""
    return export_dataset(manifest.data, manifest.seed, out_dir, verbose=verbose)


def load_manifest(root: str | Path) -> Manifest:
    path = Path(root) / MANIFEST_NAME
    try:
        return Manifest.model_validate_json(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise FormatError(f"no dataset manifest at {path}") from e
    except ValidationError as e:
        raise FormatError(f"invalid dataset manifest {path}: {e}") from e


def load_split(root: str | Path, split: str) -> list[SceneRecord]:
    """Read one split's annotations back; images are loaded lazily."""
    root = Path(root)
    path = root / f"{split}.jsonl"
    if not path.exists():
        raise FormatError(f"no annotations for split {split!r} at {path}")
    records = []
    for row in read_jsonl(path):
        records.append(SceneRecord(
            image_id=row["image_id"],
            split=split,
            scene=SceneSpec.from_dict(row["scene"]),
            questions=tuple(QAPair.from_dict(q) for q in row["questions"]),
            image_path=root / "images" / split / row["image"],
        ))
    return records


def build_vocabulary(records: list[SceneRecord]) -> Vocabulary:
    """Token and answer ids over every question of the given records (normally the train split)."""
    questions = [list(q.tokens) for r in records for q in r.questions]
    answers = [q.answer for r in records for q in r.questions]
    return Vocabulary.build(questions, answers)


def load_vocabulary(path: str | Path) -> Vocabulary:
    try:
        return Vocabulary.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise FormatError(f"no vocabulary at {path}") from e
    except ValidationError as e:
        raise FormatError(f"invalid vocabulary {path}: {e}") from e


def save_vocabulary(vocab: Vocabulary, path: str | Path) -> None:
    write_bytes(path, (vocab.model_dump_json(indent=2) + "\n").encode())
