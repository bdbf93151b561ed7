import csv

import numpy as np
import pytest

from src.backbone import build_backbone, grid_features, to_batch
from src.core.errors import TrainingError
from src.data import load_split
from src.models.feature_set import FeatureSet
from src.schemas.backbone import STAGE_NAMES
from src.schemas.vqa import Schedule, Vocabulary
from src.vqa import VqaExample, build_vqa, evaluate_vqa, run_training, train_e2e, train_vqa, vqa_examples, write_loss_log
from src.vqa.train import batch_sampler


@pytest.fixture
def toy_task(rng):
    """Four images with 2x2 grid features and one question each over three answers."""
    features = {f"img{i}": FeatureSet.from_grid(rng.standard_normal((3, 2, 2)), 32, (64, 64)) for i in range(4)}
    examples = [
        VqaExample(f"img{i}", [1 + i % 3, 4], np.eye(3)[i % 3], qtype="count" if i % 2 else "existence")
        for i in range(4)
    ]
    return features, examples


class TestBatchSampler:

    def test_epochs_cover_every_example(self):
        sample = batch_sampler(5, 2, seed=3)

        drawn = np.concatenate([sample(i) for i in range(5)])

        assert sorted(drawn[:5]) == list(range(5))
        assert sorted(drawn[5:10]) == list(range(5))

    def test_reproducible(self):
        first, second = batch_sampler(7, 3, seed=1), batch_sampler(7, 3, seed=1)
        for i in range(4):
            np.testing.assert_array_equal(first(i), second(i))

    def test_batch_larger_than_dataset(self):
        assert len(batch_sampler(3, 10, seed=0)(0)) == 3


class TestRunTraining:

    def test_non_finite_loss(self):
        def loss_fn(t, leaves, batch):
            return t.op("sum", t.op("scale", leaves["w"], factor=float("nan")))

        with pytest.raises(TrainingError):
            run_training({"w": np.ones(2)}, loss_fn, lambda i: None, Schedule(iterations=3, milestones=[]))

    def test_loss_log_csv(self, tmp_path):
        path = tmp_path / "logs" / "loss.csv"

        write_loss_log([(0, 0.75, 0.01), (1, 0.5, 0.01)], path)

        with path.open(newline="") as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["iteration", "loss", "lr"]
        assert [float(r[1]) for r in rows[1:]] == [0.75, 0.5]


class TestTrainVqa:

    def test_memorizes_a_fixed_batch(self, toy_task, tiny_vqa):
        features, examples = toy_task
        params = build_vqa(6, 3, 3, tiny_vqa, seed=0)
        before = {name: value.copy() for name, value in params.items()}
        schedule = Schedule(iterations=40, batch_size=4, milestones=[])

        result = train_vqa(params, examples, features, tiny_vqa, schedule, seed=0)

        assert len(result.log) == 40
        assert result.losses[-1] < result.losses[0]
        assert not np.array_equal(result.params["vqa.cls.bias"], before["vqa.cls.bias"])
        np.testing.assert_array_equal(params["vqa.cls.bias"], before["vqa.cls.bias"])

    def test_empty_dataset(self, tiny_vqa):
        with pytest.raises(TrainingError):
            train_vqa(build_vqa(6, 3, 3, tiny_vqa, seed=0), [], {}, tiny_vqa, Schedule(iterations=1))

    def test_evaluate(self, toy_task, tiny_vqa):
        features, examples = toy_task

        report = evaluate_vqa(build_vqa(6, 3, 3, tiny_vqa, seed=0), examples, features, tiny_vqa, batch_size=3)

        assert report["count"] == 4
        assert set(report["per_type"]) == {"count", "existence"}
        assert 0.0 <= report["accuracy"] <= 1.0

    def test_zero_targets_never_score(self, toy_task, tiny_vqa):
        features, examples = toy_task
        unanswerable = [VqaExample(e.image_id, e.tokens, np.zeros(3), e.qtype) for e in examples]

        report = evaluate_vqa(build_vqa(6, 3, 3, tiny_vqa, seed=0), unanswerable, features, tiny_vqa)

        assert report["accuracy"] == 0.0


def test_examples_from_records(tiny_dataset):
    records = load_split(tiny_dataset, "train")
    vocab = Vocabulary.build([list(p.tokens) for r in records for p in r.questions], ["yes"])

    examples = vqa_examples(records, vocab)

    pairs = [p for r in records for p in r.questions]
    assert len(examples) == len(pairs)
    for example, pair in zip(examples, pairs):
        assert example.target.sum() == (1.0 if pair.answer == "yes" else 0.0)
        assert example.qtype == pair.qtype


@pytest.mark.slow
def test_e2e_leaves_frozen_stages_alone(rng, tiny_backbone, tiny_vqa):
    backbone = build_backbone(tiny_backbone, seed=0)
    head = build_vqa(6, 3, tiny_backbone.stage_channels[-1], tiny_vqa, seed=0)
    params = {**backbone, **head}
    images = {f"img{i}": rng.integers(0, 256, (64, 64, 3), dtype=np.uint8) for i in range(2)}
    examples = [VqaExample(f"img{i}", [1, 2], np.eye(3)[i]) for i in range(2)]
    schedule = Schedule.preset("e2e").scaled(2, batch_size=2)

    result = train_e2e(params, examples, images, tiny_backbone, tiny_vqa, schedule, seed=0)

    for name, value in params.items():
        if name.startswith(("stem.", "res2.")) or name.endswith((".mean", ".var")):
            np.testing.assert_array_equal(result.params[name], value, err_msg=name)
    assert not np.array_equal(result.params["res5.0.conv1.weight"], params["res5.0.conv1.weight"])
    assert all(np.isfinite(result.losses))


@pytest.mark.slow
def test_e2e_with_every_stage_frozen_matches_cached_training(rng, tiny_backbone, tiny_vqa):
    """With the whole backbone frozen, e2e training is head training on pre-extracted grid features."""
    backbone = build_backbone(tiny_backbone, seed=0)
    head = build_vqa(6, 3, tiny_backbone.stage_channels[-1], tiny_vqa, seed=0)
    images = {f"img{i}": rng.integers(0, 256, (64, 64, 3), dtype=np.uint8) for i in range(3)}
    examples = [VqaExample(f"img{i}", [1 + i, 5], np.eye(3)[i]) for i in range(3)]
    schedule = Schedule.preset("e2e").scaled(4, batch_size=2).model_copy(update={"frozen": list(STAGE_NAMES)})
    features = {
        image_id: FeatureSet.from_grid(grid_features(to_batch([image]), backbone, tiny_backbone)[0], 32, image.shape[:2])
        for image_id, image in images.items()
    }

    e2e = train_e2e({**backbone, **head}, examples, images, tiny_backbone, tiny_vqa, schedule, seed=5)
    cached = train_vqa(head, examples, features, tiny_vqa, schedule, seed=5)

    assert len(e2e.losses) == len(cached.losses) == 4
    np.testing.assert_allclose(e2e.losses, cached.losses, rtol=1e-5)
    for name, value in backbone.items():
        np.testing.assert_array_equal(e2e.params[name], value, err_msg=name)
