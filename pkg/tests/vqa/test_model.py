import numpy as np
import pytest

from src.core.errors import InvalidArgumentError, ShapeError
from src.kernels import NO_GRAD
from src.kernels.gradcheck import check_function
from src.models.feature_set import FeatureSet
from src.schemas.vqa import PPMConfig
from src.selftest.checks import tiny_head_config
from src.vqa import VqaBatch, answer, build_vqa, ppm, soft_accuracy, vqa_forward, vqa_loss
from src.vqa.model import pad_tokens, stack_features


def _batch(rng, rows=5, dim=3, mask=None):
    mask = np.ones((2, rows), bool) if mask is None else np.asarray(mask, bool)
    tokens, token_mask = pad_tokens([[1, 2, 3], [4]])
    return VqaBatch(rng.standard_normal((2, rows, dim)), mask, tokens, token_mask)


class TestVqaForward:

    def test_shapes(self, rng):
        config = tiny_head_config(False)
        params = build_vqa(6, 7, 3, config, seed=0)

        logits, attention = vqa_forward(NO_GRAD, params, _batch(rng), config)

        assert logits.shape == (2, 7)
        assert attention.shape == (2, 5)

    def test_attention_is_a_distribution_over_real_rows(self, rng):
        config = tiny_head_config(False)
        params = build_vqa(6, 7, 3, config, seed=0)
        mask = [[1, 1, 0, 0, 0], [1, 1, 1, 1, 0]]

        _, attention = vqa_forward(NO_GRAD, params, _batch(rng, mask=mask), config)

        np.testing.assert_allclose(attention.sum(axis=1), 1.0)
        assert np.all(attention >= 0)
        assert np.all(attention[~np.asarray(mask, bool)] == 0)

    def test_padded_rows_do_not_change_the_answer(self, rng):
        """Values in masked rows never reach the logits."""
        config = tiny_head_config(False)
        params = build_vqa(6, 7, 3, config, seed=0)
        batch = _batch(rng, mask=[[1, 1, 1, 0, 0], [1, 1, 1, 0, 0]])
        noisy = VqaBatch(batch.features.copy(), batch.mask, batch.tokens, batch.token_mask)
        noisy.features[:, 3:] = 100.0

        clean_logits, _ = vqa_forward(NO_GRAD, params, batch, config)
        noisy_logits, _ = vqa_forward(NO_GRAD, params, noisy, config)

        np.testing.assert_allclose(clean_logits, noisy_logits)

    def test_fully_masked_example(self, rng):
        config = tiny_head_config(False)
        params = build_vqa(6, 7, 3, config, seed=0)

        with pytest.raises(InvalidArgumentError):
            vqa_forward(NO_GRAD, params, _batch(rng, mask=[[0] * 5, [1] * 5]), config)

    def test_empty_question(self, rng):
        config = tiny_head_config(False)
        params = build_vqa(6, 7, 3, config, seed=0)
        batch = _batch(rng)
        batch.token_mask[1] = False

        with pytest.raises(InvalidArgumentError):
            vqa_forward(NO_GRAD, params, batch, config)

    def test_feature_norm(self, rng):
        config = tiny_head_config(False).model_copy(update={"feature_norm": True})
        params = build_vqa(6, 7, 3, config, seed=0)
        batch = _batch(rng)
        scaled = VqaBatch(batch.features * 10.0, batch.mask, batch.tokens, batch.token_mask)

        np.testing.assert_allclose(vqa_forward(NO_GRAD, params, batch, config)[0],
                                   vqa_forward(NO_GRAD, params, scaled, config)[0], rtol=1e-6, atol=1e-9)

    @pytest.mark.parametrize("ppm_enabled", [False, True])
    def test_gradients(self, rng, ppm_enabled):
        config = tiny_head_config(ppm_enabled)
        params = build_vqa(6, 3, 3, config, seed=1)
        features = rng.standard_normal((2, 3, 2, 2)) if ppm_enabled else rng.standard_normal((2, 4, 3))
        tokens, token_mask = pad_tokens([[1, 2], [5]])
        batch = VqaBatch(features, np.ones((2, 4), bool), tokens, token_mask)
        targets = rng.random((2, 3))

        def loss(t, p):
            logits, _ = vqa_forward(t, p, batch, config)
            return vqa_loss(t, logits, targets)

        result = check_function(loss, params)
        assert result.ok, f"{result.worst}: rel {result.max_rel_error:.2e}"


class TestPPM:

    def test_concatenates_pyramid_branches(self, rng):
        config = PPMConfig(enabled=True, pool_sizes=[1, 2], proj_dim=3)
        params = build_vqa(4, 2, 5, tiny_head_config(True).model_copy(update={"ppm": config}), seed=0)
        grid_map = rng.standard_normal((5, 4, 6))

        out = ppm(NO_GRAD, params, grid_map, config)

        assert out.shape == (config.output_channels(5), 4, 6)
        np.testing.assert_array_equal(out[:5], grid_map)

    def test_grid_smaller_than_largest_pool(self, rng):
        config = PPMConfig(enabled=True, pool_sizes=[1, 4], proj_dim=2)
        params = build_vqa(4, 2, 3, tiny_head_config(True).model_copy(update={"ppm": config}), seed=0)

        with pytest.raises(ShapeError):
            ppm(NO_GRAD, params, rng.standard_normal((3, 2, 2)), config)

    def test_needs_grid_maps(self, rng):
        config = tiny_head_config(True)
        params = build_vqa(6, 3, 3, config, seed=0)

        with pytest.raises(ShapeError):
            vqa_forward(NO_GRAD, params, _batch(rng, rows=4), config)

    def test_pool_sizes_increase(self):
        with pytest.raises(ValueError):
            PPMConfig(pool_sizes=[4, 1])


class TestAnswer:

    def test_single_question(self, rng):
        config = tiny_head_config(False)
        params = build_vqa(6, 7, 3, config, seed=0)
        features = FeatureSet.from_grid(rng.standard_normal((3, 2, 2)), 32, (64, 64))

        answer_id, attention = answer(params, features, [1, 2], config)

        assert 0 <= answer_id < 7
        assert attention.shape == (4,)
        assert attention.sum() == pytest.approx(1.0)

    def test_stack_features_needs_equal_sizes(self, rng):
        a = FeatureSet.from_grid(rng.standard_normal((3, 2, 2)), 32, (64, 64))
        b = FeatureSet.from_grid(rng.standard_normal((3, 2, 3)), 32, (64, 96))

        with pytest.raises(ShapeError):
            stack_features([a, b])

    def test_soft_accuracy(self):
        logits = np.array([[0.1, 0.9], [0.8, 0.2]])
        targets = np.array([[0.0, 1.0], [0.0, 0.3]])

        assert soft_accuracy(logits, targets) == pytest.approx(0.5)
