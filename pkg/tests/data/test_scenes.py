import numpy as np
import pytest
from pydantic import ValidationError

from src.core.errors import LabelError, PlacementError
from src.data import augment, derive_answer, gen_questions, gen_scene, majority_baseline, render_scene, tokenize
from src.data.scenes import COLOR_RGB
from src.models.box import Box
from src.models.scene import QAPair, SceneObject, SceneSpec
from src.schemas.data import AugmentPolicy, DataConfig


def _obj(shape, color, center, size=10) -> SceneObject:
    return SceneObject(shape, color, center, size, Box(0, 0, 1, 1))


def _scene(*objects) -> SceneSpec:
    return SceneSpec(64, 64, tuple(objects), (24, 24, 24), seed=0)


class TestGenScene:

    def test_same_seed_same_pixels(self, tiny_data):
        first = gen_scene(42, tiny_data)
        second = gen_scene(42, tiny_data)

        np.testing.assert_array_equal(first.image, second.image)
        assert first.spec == second.spec

    def test_objects_and_boxes_stay_on_canvas(self, tiny_data):
        for seed in range(20):
            scene = gen_scene(seed, tiny_data).spec

            assert 1 <= len(scene.objects) <= tiny_data.difficulty
            for obj in scene.objects:
                assert 0 <= obj.box.x1 < obj.box.x2 <= tiny_data.canvas_size
                assert 0 <= obj.box.y1 < obj.box.y2 <= tiny_data.canvas_size
                assert obj.box.width <= tiny_data.max_object_size

    def test_image_shape(self, tiny_data):
        rendered = gen_scene(0, tiny_data)
        assert rendered.image.shape == (64, 64, 3) and rendered.image.dtype == np.uint8

    def test_difficulty_out_of_range(self, tiny_data):
        with pytest.raises(PlacementError):
            gen_scene(0, tiny_data, difficulty=9)

    def test_unplaceable_scene_raises(self):
        """With a separation no two centers can meet, every multi-object scene fails."""
        config = DataConfig(canvas_size=64, min_object_size=8, max_object_size=16, min_separation=1000.0, difficulty=8)
        outcomes = []
        for seed in range(30):
            try:
                outcomes.append(len(gen_scene(seed, config).spec.objects))
            except PlacementError:
                outcomes.append(None)

        assert None in outcomes
        assert all(count in (None, 1) for count in outcomes)


class TestRenderScene:

    def test_square_box_is_tight(self):
        rendered = render_scene(_scene(_obj("square", "red", (20.0, 20.0), size=10)))

        box = rendered.spec.objects[0].box
        assert box == Box(15, 15, 25, 25)
        assert tuple(rendered.image[20, 20]) == COLOR_RGB["red"]
        assert tuple(rendered.image[14, 20]) == (24, 24, 24)

    def test_bar_is_flat(self):
        rendered = render_scene(_scene(_obj("bar", "blue", (32.0, 32.0), size=18)))

        box = rendered.spec.objects[0].box
        assert box.width == 18 and box.height == 6


class TestQuestions:

    def test_answers_rederive_from_scene(self, tiny_data):
        for seed in range(10):
            scene = gen_scene(seed, tiny_data).spec
            for pair in gen_questions(scene, 8, seed):
                assert derive_answer(scene, pair) == pair.answer

    @pytest.mark.slow
    def test_existence_answers_are_balanced(self, tiny_data):
        """10K existence questions over ten scenes split yes/no within 52/48."""
        answers = [
            pair.answer
            for seed in range(10)
            for pair in gen_questions(gen_scene(seed, tiny_data).spec, 1000, seed, templates=["existence"])
        ]

        assert len(answers) == 10_000
        assert set(answers) == {"yes", "no"}
        assert 0.48 <= answers.count("yes") / len(answers) <= 0.52

    def test_deterministic(self, tiny_data):
        scene = gen_scene(3, tiny_data).spec
        assert gen_questions(scene, 5, seed=9) == gen_questions(scene, 5, seed=9)

    def test_count_answer(self):
        scene = _scene(_obj("circle", "red", (10.0, 10.0)), _obj("circle", "blue", (40.0, 40.0)))

        pairs = gen_questions(scene, 10, seed=0, templates=["count"])

        for pair in pairs:
            assert pair.answer == str(scene.count(pair.query["shape"]))

    def test_impossible_color_query_falls_back_to_existence(self):
        scene = _scene(_obj("circle", "red", (10.0, 10.0)), _obj("circle", "blue", (40.0, 40.0)))

        pairs = gen_questions(scene, 4, seed=1, templates=["color-query"])

        assert {p.qtype for p in pairs} == {"existence"}

    def test_spatial_relations(self):
        scene = _scene(_obj("circle", "red", (10.0, 50.0)), _obj("square", "blue", (40.0, 20.0)))
        a, b = {"shape": "circle", "color": "red"}, {"shape": "square", "color": "blue"}

        left = QAPair((), "", "spatial", {"a": a, "b": b, "relation": "left"})
        above = QAPair((), "", "spatial", {"a": a, "b": b, "relation": "above"})

        assert derive_answer(scene, left) == "yes"
        assert derive_answer(scene, above) == "no"

    def test_empty_scene(self):
        with pytest.raises(LabelError):
            gen_questions(_scene(), 1, seed=0)

    def test_unknown_template(self):
        with pytest.raises(LabelError):
            gen_questions(_scene(_obj("circle", "red", (10.0, 10.0))), 1, seed=0, templates=["why"])

    def test_tokenize(self):
        assert tokenize("Is there a RED circle?") == ["is", "there", "a", "red", "circle"]

    def test_majority_baseline(self):
        train = [QAPair((), "yes", "existence"), QAPair((), "yes", "existence"), QAPair((), "no", "existence")]
        test = [QAPair((), "yes", "existence"), QAPair((), "2", "count")]

        assert majority_baseline(train, test) == 0.5


class TestAugment:

    def test_identity_policy_copies(self, tiny_data):
        image = gen_scene(0, tiny_data).image

        out = augment(image, seed=0, policy=AugmentPolicy())

        np.testing.assert_array_equal(out, image)
        assert out is not image

    def test_deterministic_and_shape_preserving(self, tiny_data):
        image = gen_scene(0, tiny_data).image
        policy = AugmentPolicy.default_train()

        first = augment(image, seed=5, policy=policy)

        assert first.shape == image.shape and first.dtype == np.uint8
        np.testing.assert_array_equal(first, augment(image, seed=5, policy=policy))

    def test_range_bounds(self):
        with pytest.raises(ValidationError):
            AugmentPolicy(rotation=(-30.0, 30.0))


class TestDataConfig:

    def test_objects_must_fit(self):
        with pytest.raises(ValidationError):
            DataConfig(canvas_size=32, max_object_size=20)

    def test_resize_order(self):
        with pytest.raises(ValidationError):
            DataConfig(resize_short=800, resize_long=600)
