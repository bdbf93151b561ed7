import json
from unittest.mock import patch

import numpy as np
import pytest

from src.core.errors import FormatError
from src.utils.io import atomic_write, read_jsonl, write_json, write_jsonl
from src.utils.netpbm import encode_pgm, heatmap_to_gray, load_gray, load_image, save_pgm, save_ppm


class TestAtomicWrite:

    def test_creates_parent_directories(self, tmp_path):
        path = tmp_path / "a" / "b" / "out.json"

        write_json(path, {"k": 1})

        assert json.loads(path.read_text()) == {"k": 1}

    def test_failure_leaves_destination_untouched(self, tmp_path):
        """An exception mid-write keeps the old file and removes the temp file."""
        path = tmp_path / "out.txt"
        path.write_text("old")

        with pytest.raises(RuntimeError):
            with atomic_write(path, "w") as f:
                f.write("new")
                raise RuntimeError("boom")

        assert path.read_text() == "old"
        assert [p.name for p in tmp_path.iterdir()] == ["out.txt"]

    @patch("src.utils.io.os.replace", side_effect=OSError("disk full"))
    def test_failed_rename_cleans_up(self, mock_replace, tmp_path):
        path = tmp_path / "out.bin"

        with pytest.raises(OSError):
            with atomic_write(path) as f:
                f.write(b"data")

        mock_replace.assert_called_once()
        assert list(tmp_path.iterdir()) == []

    def test_jsonl(self, tmp_path):
        rows = [{"a": 1}, {"b": [1, 2]}]
        path = tmp_path / "rows.jsonl"

        write_jsonl(path, rows)

        assert read_jsonl(path) == rows


class TestNetpbm:

    def test_ppm_keeps_pixels(self, tmp_path, rng):
        image = rng.integers(0, 256, size=(5, 7, 3), dtype=np.uint8)
        path = tmp_path / "img.ppm"

        save_ppm(image, path)

        assert path.read_bytes()[:2] == b"P6"
        np.testing.assert_array_equal(load_image(path), image)

    def test_pgm_header(self):
        assert encode_pgm(np.zeros((3, 4), np.uint8))[:2] == b"P5"

    def test_pgm_keeps_pixels(self, tmp_path):
        gray = np.arange(12, dtype=np.uint8).reshape(3, 4) * 20
        path = tmp_path / "heat.pgm"

        save_pgm(gray, path)

        np.testing.assert_array_equal(load_gray(path), gray)

    def test_heatmap_to_gray(self):
        np.testing.assert_array_equal(heatmap_to_gray(np.array([[0.0, 0.5, 1.0]])), [[0, 128, 255]])

    def test_wrong_dtype(self):
        with pytest.raises(FormatError):
            save_ppm(np.zeros((2, 2, 3), np.float32), "unused.ppm")

    def test_unreadable_image(self, tmp_path):
        path = tmp_path / "junk.ppm"
        path.write_bytes(b"not an image")

        with pytest.raises(FormatError):
            load_image(path)

    def test_missing_image(self, tmp_path):
        with pytest.raises(FormatError):
            load_image(tmp_path / "absent.ppm")
