import numpy as np
import pytest

from src.core.errors import InvalidArgumentError, ShapeError
from src.kernels import adaptive_avg_pool2d, max_pool2d, roi_pool, upsample_nearest
from src.selftest.oracles import bin_scan_roi_pool, random_boxes


class TestMaxPool:

    def test_single_window(self):
        out = max_pool2d(np.array([[[1.0, 2.0], [3.0, 4.0]]]), kernel_size=2)
        np.testing.assert_array_equal(out, [[[4.0]]])

    def test_stem_pool_geometry(self, rng):
        """3x3 stride-2 padding-1 pooling halves even extents."""
        out = max_pool2d(rng.standard_normal((2, 16, 12)), kernel_size=3, stride=2, padding=1)
        assert out.shape == (2, 8, 6)

    def test_padding_never_wins(self):
        out = max_pool2d(np.full((1, 3, 3), -5.0), kernel_size=3, stride=2, padding=1)
        np.testing.assert_array_equal(out, -5.0)

    def test_padding_too_large(self):
        with pytest.raises(InvalidArgumentError):
            max_pool2d(np.zeros((1, 4, 4)), kernel_size=2, padding=2)


class TestAdaptiveAvgPool:

    def test_ramp(self):
        x = np.arange(16, dtype=np.float64).reshape(1, 4, 4)

        out = adaptive_avg_pool2d(x, 2, 2)

        np.testing.assert_allclose(out, [[[2.5, 4.5], [10.5, 12.5]]])

    def test_global_pool_is_mean(self, rng):
        x = rng.standard_normal((3, 5, 7))
        np.testing.assert_allclose(adaptive_avg_pool2d(x, 1, 1)[:, 0, 0], x.mean(axis=(1, 2)))

    def test_uneven_bins_overlap(self):
        """5 -> 2 uses bins [0, 3) and [2, 5)."""
        x = np.arange(5, dtype=np.float64).reshape(1, 1, 5)
        np.testing.assert_allclose(adaptive_avg_pool2d(x, 1, 2), [[[1.0, 3.0]]])

    def test_output_larger_than_input(self):
        with pytest.raises(ShapeError):
            adaptive_avg_pool2d(np.zeros((1, 2, 2)), 3, 3)


class TestUpsampleNearest:

    def test_doubling_repeats_cells(self):
        x = np.array([[[1.0, 2.0], [3.0, 4.0]]])
        np.testing.assert_array_equal(upsample_nearest(x, 4, 4)[0], np.kron(x[0], np.ones((2, 2))))


class TestRoiPool:

    def test_whole_map_box_takes_global_max(self, rng):
        feature_map = rng.standard_normal((4, 6, 6))

        out = roi_pool(feature_map, [[0, 0, 80, 80]], output_size=1, stride=16)

        np.testing.assert_array_equal(out[0, :, 0, 0], feature_map.max(axis=(1, 2)))

    def test_matches_bin_scan_reference(self, rng):
        feature_map = rng.standard_normal((3, 9, 11))
        boxes = random_boxes(rng, 40, extent=8 * 16)

        fast = roi_pool(feature_map, boxes, output_size=3, stride=16)

        for r, box in enumerate(boxes):
            np.testing.assert_array_equal(fast[r], bin_scan_roi_pool(feature_map, box, 3, 16))

    def test_mean_reduction(self):
        feature_map = np.arange(16, dtype=np.float64).reshape(1, 4, 4)

        out = roi_pool(feature_map, [[0, 0, 48, 48]], output_size=1, stride=16, reduction="mean")

        assert out[0, 0, 0, 0] == pytest.approx(feature_map.mean())

    def test_output_shape(self, rng):
        out = roi_pool(rng.standard_normal((5, 8, 8)), random_boxes(rng, 7, extent=100), output_size=2, stride=16)
        assert out.shape == (7, 5, 2, 2)

    def test_degenerate_box(self):
        with pytest.raises(InvalidArgumentError):
            roi_pool(np.zeros((1, 4, 4)), [[10, 10, 10, 20]], output_size=2, stride=16)

    def test_box_outside_map(self):
        with pytest.raises(ShapeError):
            roi_pool(np.zeros((1, 4, 4)), [[200, 200, 260, 260]], output_size=2, stride=16)

    def test_unknown_reduction(self):
        with pytest.raises(InvalidArgumentError):
            roi_pool(np.zeros((1, 4, 4)), [[0, 0, 16, 16]], output_size=1, stride=16, reduction="median")
