import numpy as np
import pytest

from src.core.errors import TrainingError
from src.schemas.vqa import Schedule
from src.vqa import Adamax, SGDMomentum, build_optimizer
from src.vqa.optim import clip_gradients, trainable_names


class TestSchedule:

    def test_step_decay(self):
        schedule = Schedule.preset("detector_1x")

        assert schedule.lr_at(0) == pytest.approx(0.02)
        assert schedule.lr_at(59999) == pytest.approx(0.02)
        assert schedule.lr_at(60000) == pytest.approx(0.002)
        assert schedule.lr_at(89999) == pytest.approx(0.0002)

    def test_warmup(self):
        schedule = Schedule(base_lr=1.0, warmup_iterations=10, warmup_factor=0.2, milestones=[])

        assert schedule.lr_at(0) == pytest.approx(0.2)
        assert schedule.lr_at(5) == pytest.approx(0.6)
        assert schedule.lr_at(10) == pytest.approx(1.0)

    def test_scaled_keeps_the_shape(self):
        schedule = Schedule.preset("pythia_12k").scaled(120)

        assert schedule.iterations == 120
        assert schedule.milestones == [50, 70, 90, 110]
        assert schedule.batch_size == 512
        assert Schedule.preset("pythia_12k").scaled(120, batch_size=8).batch_size == 8

    def test_presets(self):
        assert Schedule.preset("e2e").frozen == ["stem", "res2"]
        assert Schedule.preset("pythia_22k").iterations == 22000
        with pytest.raises(ValueError):
            Schedule.preset("imagenet")


class TestTrainableNames:

    def test_frozen_stages_and_statistics(self):
        params = dict.fromkeys([
            "stem.conv.weight", "res2.0.conv1.weight", "res3.0.conv1.weight",
            "res3.0.bn1.mean", "res3.0.bn1.var", "res3.0.bn1.gamma", "vqa.cls.bias",
        ])

        names = trainable_names(params, Schedule.preset("e2e"))

        assert names == ["res3.0.conv1.weight", "res3.0.bn1.gamma", "vqa.cls.bias"]

    def test_prefix_matches_whole_stage(self):
        params = dict.fromkeys(["res2.0.conv1.weight", "res20.weight"])
        assert trainable_names(params, Schedule(frozen=["res2"])) == ["res20.weight"]


class TestClipGradients:

    def test_scales_to_max_norm(self):
        clipped, norm = clip_gradients({"a": np.array([3.0]), "b": np.array([4.0])}, 1.0)

        assert norm == pytest.approx(5.0)
        np.testing.assert_allclose([clipped["a"][0], clipped["b"][0]], [0.6, 0.8], rtol=1e-5)

    def test_small_or_unbounded_norm_is_untouched(self):
        grads = {"a": np.array([0.1])}

        assert clip_gradients(grads, 1.0)[0] is grads
        assert clip_gradients({"a": np.array([30.0])}, None)[0]["a"][0] == 30.0


class TestOptimizers:

    def test_sgd_momentum(self):
        params = {"w": np.array([1.0])}
        schedule = Schedule(optimizer="sgd_momentum", base_lr=0.1, weight_decay=0.0, grad_clip=None, milestones=[])
        optimizer = build_optimizer(params, schedule)

        optimizer.step({"w": np.array([1.0])}, 0)
        first = params["w"][0]
        optimizer.step({"w": np.array([1.0])}, 1)

        assert isinstance(optimizer, SGDMomentum)
        assert first == pytest.approx(0.9)
        assert params["w"][0] == pytest.approx(0.71)

    def test_adamax_first_step_moves_by_lr(self):
        params = {"w": np.zeros(2, np.float32)}
        schedule = Schedule(base_lr=0.01, grad_clip=None, milestones=[])
        optimizer = build_optimizer(params, schedule)

        optimizer.step({"w": np.array([2.0, -0.5])}, 0)

        assert isinstance(optimizer, Adamax)
        assert params["w"].dtype == np.float32
        np.testing.assert_allclose(params["w"], [-0.01, 0.01], rtol=1e-5)

    def test_frozen_parameters_never_move(self):
        params = {"stem.conv.weight": np.ones(3), "res3.w": np.ones(3), "res3.bn.mean": np.ones(3)}
        optimizer = build_optimizer(params, Schedule(frozen=["stem"], grad_clip=None))

        optimizer.step({name: np.ones(3) for name in params}, 0)

        np.testing.assert_array_equal(params["stem.conv.weight"], np.ones(3))
        np.testing.assert_array_equal(params["res3.bn.mean"], np.ones(3))
        assert np.all(params["res3.w"] < 1.0)

    def test_positive_learning_rate(self):
        schedule = Schedule().model_copy(update={"base_lr": 0.0})

        with pytest.raises(TrainingError):
            build_optimizer({}, schedule)
