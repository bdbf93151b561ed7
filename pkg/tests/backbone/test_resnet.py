import numpy as np
import pytest
from pydantic import ValidationError

from src.backbone import build_backbone, forward, forward_c5, forward_to_c4, grid_count, grid_features, is_trainable
from src.core.errors import ShapeError
from src.schemas.backbone import BackboneConfig
from src.selftest.checks import GRID_COUNT_TABLE


class TestGridCount:

    @pytest.mark.parametrize("size,expected", list(GRID_COUNT_TABLE.items()))
    def test_table(self, size, expected):
        assert grid_count(*size) == expected

    def test_partial_cells_count(self):
        """ceil, not floor: a 33-pixel side needs two cells."""
        assert grid_count(33, 32) == 2


class TestBackboneForward:

    def test_c4_and_c5_extents(self, rng, tiny_backbone):
        weights = build_backbone(tiny_backbone, seed=0)
        image = rng.standard_normal((3, 64, 64)).astype(np.float32)

        c4, c5 = forward(image, weights, tiny_backbone)

        assert c4.shape == (tiny_backbone.c4_channels, 4, 4)
        assert c5.shape == (tiny_backbone.c5_channels, 2, 2)

    def test_extents_round_up(self, rng, tiny_backbone):
        """A 70x90 image gives ceil(H/16) x ceil(W/16) at C4 and ceil(H/32) x ceil(W/32) at C5."""
        weights = build_backbone(tiny_backbone, seed=0)
        image = rng.standard_normal((3, 70, 90)).astype(np.float32)

        c4, c5 = forward(image, weights, tiny_backbone)

        assert c4.shape[1:] == (5, 6)
        assert c5.shape[1:] == (3, 3)
        assert c5.shape[1] * c5.shape[2] == grid_count(70, 90)

    def test_grid_features_are_standard_c5(self, rng, tiny_backbone):
        weights = build_backbone(tiny_backbone, seed=1)
        image = rng.standard_normal((3, 64, 96)).astype(np.float32)

        np.testing.assert_array_equal(grid_features(image, weights, tiny_backbone), forward(image, weights, tiny_backbone)[1])

    def test_batched_forward_matches_single(self, rng, tiny_backbone):
        weights = build_backbone(tiny_backbone, seed=2)
        images = rng.standard_normal((2, 3, 64, 64)).astype(np.float32)

        batched = forward_to_c4(images, weights, tiny_backbone)

        np.testing.assert_allclose(batched[1], forward_to_c4(images[1], weights, tiny_backbone), rtol=1e-5, atol=1e-6)

    def test_too_small_image(self, tiny_backbone):
        weights = build_backbone(tiny_backbone, seed=0)
        with pytest.raises(ShapeError):
            forward_to_c4(np.zeros((3, 16, 64), np.float32), weights, tiny_backbone)

    def test_wrong_channel_count(self, tiny_backbone):
        weights = build_backbone(tiny_backbone, seed=0)
        with pytest.raises(ShapeError):
            forward_to_c4(np.zeros((1, 64, 64), np.float32), weights, tiny_backbone)

    def test_unknown_c5_mode(self, rng, tiny_backbone):
        weights = build_backbone(tiny_backbone, seed=0)
        with pytest.raises(ShapeError):
            forward_c5(np.zeros((8, 4, 4), np.float32), weights, tiny_backbone, mode="atrous")


class TestDilationConversion:

    @pytest.mark.parametrize("height,width", [(64, 64), (64, 96), (96, 128)])
    def test_dilated_c5_subsampled_equals_standard_c5(self, rng, tiny_backbone, height, width):
        """Same weights: the dilated map at even positions is the standard map."""
        weights = {k: v.astype(np.float64) for k, v in build_backbone(tiny_backbone, seed=3).items()}
        c4 = forward_to_c4(rng.standard_normal((3, height, width)), weights, tiny_backbone)

        standard = forward_c5(c4, weights, tiny_backbone, mode="standard")
        dilated = forward_c5(c4, weights, tiny_backbone, mode="dilated")

        assert dilated.shape[1:] == c4.shape[1:]
        np.testing.assert_allclose(dilated[..., ::2, ::2], standard, rtol=1e-5, atol=1e-9)


class TestBuildBackbone:

    def test_same_seed_same_weights(self, tiny_backbone):
        first = build_backbone(tiny_backbone, seed=11)
        second = build_backbone(tiny_backbone, seed=11)

        assert first.keys() == second.keys()
        assert all(np.array_equal(first[k], second[k]) for k in first)

    def test_different_seed_different_weights(self, tiny_backbone):
        first = build_backbone(tiny_backbone, seed=11)
        second = build_backbone(tiny_backbone, seed=12)
        assert not np.array_equal(first["stem.conv.weight"], second["stem.conv.weight"])

    def test_projection_shortcuts_only_where_needed(self, tiny_backbone):
        """res2 keeps 4 channels at stride 1, so it has no projection."""
        weights = build_backbone(tiny_backbone, seed=0)
        assert "res2.0.shortcut.weight" not in weights
        assert "res3.0.shortcut.weight" in weights

    def test_batchnorm_statistics_are_frozen(self):
        assert not is_trainable("res3.0.bn1.mean")
        assert not is_trainable("stem.bn.var")
        assert is_trainable("stem.bn.gamma")
        assert is_trainable("res5.0.conv2.weight")


class TestBackboneConfig:

    def test_defaults_are_valid(self):
        config = BackboneConfig()
        assert config.c5_stride("standard") == 32
        assert config.c5_stride("dilated") == 16

    def test_wrong_stage_count(self):
        with pytest.raises(ValidationError):
            BackboneConfig(stage_channels=[4, 8])

    def test_c4_stride_must_be_16(self):
        with pytest.raises(ValidationError):
            BackboneConfig(stage_strides=[2, 2, 2, 2])

    def test_unknown_key(self):
        with pytest.raises(ValidationError):
            BackboneConfig(depth=50)
