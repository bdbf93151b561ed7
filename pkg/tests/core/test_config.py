import os
from pathlib import Path

import pytest

from src.core.config import (
    applied_threads,
    apply_thread_limit,
    decode_value,
    load_config,
    parse_override,
    threads_from_argv,
)
from src.core.errors import ConfigError
from src.schemas.run import RunConfig

CONFIG_DIR = Path(__file__).parents[2] / "configs"


def _env(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadConfig:

    def test_defaults(self):
        assert load_config() == RunConfig()

    def test_file_values_are_decoded(self, tmp_path):
        path = _env(tmp_path, "run.env", "seed = 4\nbackbone.stage_channels = [4, 4, 8, 8, 8]\ndetector.head.mode = c5_14x14\n")

        config = load_config([path])

        assert config.seed == 4
        assert config.backbone.stage_channels == [4, 4, 8, 8, 8]
        assert config.detector.head.mode == "c5_14x14"

    def test_later_sources_win(self, tmp_path):
        first = _env(tmp_path, "a.env", "seed = 1\ndetector.num_regions = 10\n")
        second = _env(tmp_path, "b.env", "seed = 2\n")

        config = load_config([first, second], [("detector.num_regions", "36")])

        assert config.seed == 2
        assert config.detector.num_regions == 36

    def test_non_string_overrides_pass_through(self):
        assert load_config(overrides=[("seed", 9)]).seed == 9

    @pytest.mark.parametrize("name", ["toy.env", "full_scale.env"])
    def test_shipped_configs_validate(self, name):
        assert isinstance(load_config([CONFIG_DIR / name]), RunConfig)

    @pytest.mark.parametrize("key, value", [
        ("detector.colour", "red"),                 # unknown key
        ("detector.num_regions", "many"),           # type mismatch
        ("backbone.stage_channels", "[4, 4, 8]"),   # violated invariant
        ("detector..num_regions", "3"),             # malformed key
    ])
    def test_invalid(self, key, value):
        with pytest.raises(ConfigError):
            load_config(overrides=[(key, value)])

    def test_key_under_a_scalar(self):
        with pytest.raises(ConfigError):
            load_config(overrides=[("seed", "1"), ("seed.value", "2")])

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config([tmp_path / "absent.env"])

    def test_config_error_exit_code(self):
        assert ConfigError("x").exit_code == 2


class TestOverrides:

    @pytest.mark.parametrize("item, expected", [
        ("detector.num_regions=36", ("detector.num_regions", "36")),
        (" seed = 3 ", ("seed", "3")),
        ("vqa.ppm.pool_sizes=[1,2]", ("vqa.ppm.pool_sizes", "[1,2]")),
    ])
    def test_parse(self, item, expected):
        assert parse_override(item) == expected

    @pytest.mark.parametrize("item", ["seed", "=3", "  =3"])
    def test_malformed(self, item):
        with pytest.raises(ConfigError):
            parse_override(item)

    @pytest.mark.parametrize("raw, value", [
        ("3", 3), ("0.5", 0.5), ("[1, 2]", [1, 2]), ("true", True), ("null", None), ("fc2_1x1", "fc2_1x1"), (None, None),
    ])
    def test_decode_value(self, raw, value):
        assert decode_value(raw) == value


def test_thread_limit_keeps_explicit_values(monkeypatch):
    monkeypatch.delenv("OMP_NUM_THREADS", raising=False)
    monkeypatch.setenv("MKL_NUM_THREADS", "6")

    apply_thread_limit(2)

    assert os.environ["OMP_NUM_THREADS"] == "2"
    assert os.environ["MKL_NUM_THREADS"] == "6"


@pytest.mark.parametrize("argv, threads", [
    (["--threads", "4", "bench"], 4),
    (["--threads=3", "bench"], 3),
    (["bench", "-p", "grid"], None),
    (["--threads", "0", "bench"], None),
    (["--threads", "many"], None),
    (["--threads"], None),
])
def test_threads_from_argv(argv, threads):
    assert threads_from_argv(argv) == threads


def test_applied_threads_prefers_the_blas_variable(monkeypatch):
    monkeypatch.setenv("GRIDFEAT_THREADS", "3")
    monkeypatch.setenv("OMP_NUM_THREADS", "5")
    assert applied_threads() == 5

    monkeypatch.delenv("OMP_NUM_THREADS")
    assert applied_threads() == 3
