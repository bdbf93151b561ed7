import struct

import numpy as np
import pytest

from src.core.errors import FormatError, UnsupportedVersionError
from src.utils.weights import decode_weights, encode_weights, load_weights, save_weights


@pytest.fixture
def weights(rng):
    return {
        "stem.conv.weight": rng.standard_normal((4, 3, 7, 7)).astype(np.float32),
        "stem.bn.gamma": np.ones(4, np.float32),
        "vqa.att_score.bias": np.zeros(1, np.float32),
    }


class TestGFWT:

    def test_save_load(self, tmp_path, weights):
        """Tensors come back with the same names, shapes and bits."""
        path = tmp_path / "model.gfwt"

        save_weights(weights, path)
        loaded = load_weights(path)

        assert loaded.keys() == weights.keys()
        for name, array in weights.items():
            assert loaded[name].dtype == np.float32
            np.testing.assert_array_equal(loaded[name], array)

    def test_reencode_is_bitwise(self, weights):
        blob = encode_weights(weights)
        assert encode_weights(decode_weights(blob)) == blob

    def test_insertion_order_does_not_matter(self, weights):
        reversed_weights = dict(reversed(list(weights.items())))
        assert encode_weights(reversed_weights) == encode_weights(weights)

    def test_header(self, weights):
        blob = encode_weights(weights)

        assert blob[:4] == b"GFWT"
        assert struct.unpack("<II", blob[4:12]) == (1, 3)

    def test_float64_is_stored_as_float32(self):
        loaded = decode_weights(encode_weights({"w": np.array([0.5, 1.5])}))
        assert loaded["w"].dtype == np.float32

    def test_bad_magic(self, weights):
        with pytest.raises(FormatError):
            decode_weights(b"GFVQ" + encode_weights(weights)[4:])

    def test_unsupported_version(self, weights):
        blob = bytearray(encode_weights(weights))
        blob[4:8] = struct.pack("<I", 2)

        with pytest.raises(UnsupportedVersionError):
            decode_weights(bytes(blob))

    def test_truncated(self, weights):
        with pytest.raises(FormatError):
            decode_weights(encode_weights(weights)[:-3])

    def test_trailing_bytes(self, weights):
        with pytest.raises(FormatError):
            decode_weights(encode_weights(weights) + b"\x00")

    def test_missing_file(self, tmp_path):
        with pytest.raises(FormatError):
            load_weights(tmp_path / "absent.gfwt")
