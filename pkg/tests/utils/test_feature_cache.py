import struct

import numpy as np
import pytest

from src.core.errors import FormatError, ShapeError, UnsupportedVersionError
from src.models.feature_set import FeatureSet
from src.utils.feature_cache import HEADER, cache_path, decode_features, encode_features, encoded_size, load_cache, save_cache


@pytest.fixture
def region_set(rng):
    boxes = np.array([[0, 0, 10, 12], [4, 4, 30, 20], [0, 0, 0, 0]], dtype=np.float32)
    return FeatureSet.from_regions(rng.standard_normal((3, 5)), boxes, [True, True, False], (40, 60))


@pytest.fixture
def grid_set(rng):
    return FeatureSet.from_grid(rng.standard_normal((5, 2, 3)), 32, (64, 96))


class TestGFVQ:

    def test_region_set_survives_disk(self, tmp_path, region_set):
        path = cache_path(tmp_path, "train", "img_000001")

        save_cache(region_set, path)
        loaded = load_cache(path)

        assert path == tmp_path / "train" / "img_000001.gfvq"
        assert loaded.kind == "region" and loaded.image_size == (40, 60)
        np.testing.assert_array_equal(loaded.vectors, region_set.vectors)
        np.testing.assert_array_equal(loaded.boxes, region_set.boxes)
        np.testing.assert_array_equal(loaded.mask, [True, True, False])

    def test_grid_set_keeps_geometry(self, grid_set):
        loaded = decode_features(encode_features(grid_set))

        assert loaded.grid_shape == (2, 3, 32)
        np.testing.assert_array_equal(loaded.to_grid_map(), grid_set.to_grid_map())

    @pytest.mark.parametrize("name", ["region_set", "grid_set"])
    def test_size_matches_header(self, request, name):
        features = request.getfixturevalue(name)
        blob = encode_features(features)
        assert len(blob) == encoded_size(features.kind, features.num_features, features.dim)

    def test_bad_magic(self, grid_set):
        with pytest.raises(FormatError):
            decode_features(b"GFWT" + encode_features(grid_set)[4:])

    def test_unsupported_version(self, grid_set):
        blob = bytearray(encode_features(grid_set))
        blob[4:8] = struct.pack("<I", 7)

        with pytest.raises(UnsupportedVersionError):
            decode_features(bytes(blob))

    def test_unknown_kind(self, grid_set):
        blob = bytearray(encode_features(grid_set))
        blob[8] = 9

        with pytest.raises(FormatError):
            decode_features(bytes(blob))

    def test_truncated_payload(self, region_set):
        with pytest.raises(FormatError):
            decode_features(encode_features(region_set)[:-4])

    def test_grid_geometry_must_match_rows(self, grid_set):
        blob = bytearray(encode_features(grid_set))
        blob[HEADER.size:HEADER.size + 4] = struct.pack("<I", 4)

        with pytest.raises(FormatError, match="inconsistent geometry"):
            decode_features(bytes(blob))

    def test_truncated_header(self):
        with pytest.raises(FormatError):
            decode_features(b"GFVQ" + b"\x00" * (HEADER.size - 5))


class TestFeatureSet:

    def test_grid_rows_are_row_major(self):
        grid_map = np.arange(2 * 2 * 3, dtype=np.float32).reshape(2, 2, 3)

        features = FeatureSet.from_grid(grid_map, 32, (64, 96))

        assert features.num_features == 6 and features.dim == 2
        np.testing.assert_array_equal(features.vectors[4], grid_map[:, 1, 1])
        assert features.mask.all()

    def test_cell_boxes_clip_to_image(self):
        features = FeatureSet.from_grid(np.zeros((1, 2, 2)), 32, (50, 64))
        np.testing.assert_array_equal(features.cell_boxes()[3], [32, 32, 64, 50])

    def test_masked_rows_are_zeroed(self, rng):
        features = FeatureSet.from_regions(rng.standard_normal((2, 3)), np.zeros((2, 4)), [True, False], (10, 10))
        assert not features.vectors[1].any()

    def test_pad_and_truncate(self, region_set):
        padded = region_set.truncate_or_pad(5)
        truncated = region_set.truncate_or_pad(2)

        assert padded.num_features == 5 and padded.mask.tolist() == [True, True, False, False, False]
        assert truncated.num_features == 2

    def test_grid_sets_keep_their_size(self, grid_set):
        assert grid_set.truncate_or_pad(2) is grid_set

    def test_region_rows_need_boxes(self, rng):
        with pytest.raises(ShapeError):
            FeatureSet.from_regions(rng.standard_normal((2, 3)), np.zeros((3, 4)), [True, True], (10, 10))
