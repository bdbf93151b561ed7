import re
import runpy
import sys
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path

import pytest

from src.app import main
from src.bench.report import read_timings
from src.utils.feature_cache import load_cache
from src.utils.netpbm import load_gray

ROOT = Path(__file__).resolve().parent.parent

TINY_ENV = """
seed = 0
backbone.stage_channels = [4, 4, 8, 8, 8]
detector.num_classes = 4
detector.num_attributes = 4
detector.num_regions = 6
detector.rpn.anchor_scales = [16, 32]
detector.rpn.channels = 8
detector.head.fc_dim = 16
detector.head.attr_hidden = 8
vqa.embed_dim = 8
vqa.question_dim = 8
vqa.attention_hidden = 8
vqa.classifier_hidden = 8
data.canvas_size = 64
data.min_object_size = 8
data.max_object_size = 16
data.min_separation = 8
data.difficulty = 3
data.questions_per_scene = 3
data.n_train = 4
data.n_val = 2
data.n_test = 2
data.resize_short = 64
data.resize_long = 64
bench.reps = 3
bench.warmup = 1
bench.image_height = 64
bench.image_width = 64
"""


@pytest.fixture
def tiny_env(tmp_path):
    path = tmp_path / "tiny.env"
    path.write_text(TINY_ENV)
    return path


@pytest.fixture
def generated(tmp_path, tiny_env):
    out = tmp_path / "data"
    assert main(["gen-data", "-c", str(tiny_env), "--out", str(out)]) == 0
    return out


def test_gen_data(capsys, generated):
    assert (generated / "manifest.json").is_file()
    assert (generated / "vocab.json").is_file()
    assert len(list((generated / "images" / "train").glob("*.ppm"))) == 4
    assert "train 4" in capsys.readouterr().out


def test_gen_data_from_manifest(generated, tmp_path):
    copy = tmp_path / "copy"

    assert main(["gen-data", "--from-manifest", str(generated), "--out", str(copy)]) == 0
    assert (copy / "test.jsonl").read_bytes() == (generated / "test.jsonl").read_bytes()


def test_extract_then_render(generated, tiny_env, tmp_path, capsys):
    image = generated / "images" / "test" / "test_000000.ppm"
    features = tmp_path / "out" / "features.gfvq"
    heatmap = tmp_path / "out" / "heat.pgm"

    assert main(["extract", "-i", str(image), "-o", str(features), "-c", str(tiny_env)]) == 0
    assert main(["render-attn", "-f", str(features), "-a", "1,0,0,0", "-o", str(heatmap)]) == 0

    assert load_cache(features).num_features == 4
    gray = load_gray(heatmap)
    assert gray.shape == (64, 64)
    assert gray[0, 0] == 255 and gray[63, 63] == 0
    assert "N=4" in capsys.readouterr().out


def test_extract_regions_with_n(generated, tiny_env, tmp_path):
    image = generated / "images" / "test" / "test_000000.ppm"
    features = tmp_path / "regions.gfvq"

    assert main(["extract", "-i", str(image), "-o", str(features), "-p", "region", "--n", "3", "-c", str(tiny_env)]) == 0
    assert load_cache(features).num_features == 3


def test_bench_grid(tiny_env, tmp_path, capsys):
    out = tmp_path / "timings.csv"

    assert main(["bench", "-p", "grid", "-o", str(out), "-c", str(tiny_env)]) == 0

    assert out.read_text().startswith("pipeline,")
    assert "## Inference time breakdown" in capsys.readouterr().out


def test_selftest_single_check(capsys):
    assert main(["selftest", "--only", "grid_count"]) == 0
    assert capsys.readouterr().out.startswith("PASS")


@pytest.mark.parametrize("argv", [
    ["selftest", "--only", "everything"],
    ["bench", "--pipeline", "fancy"],
    ["extract", "-i", "in.ppm", "-o", "out.gfvq", "-p", "patches"],
    ["render-attn", "-f", "f.gfvq", "-a", "x,y", "-o", "out.pgm"],
    ["no-such-command"],
])
def test_usage_errors_exit_1(argv):
    assert main(argv) == 1


def test_config_errors_exit_2(tmp_path):
    out = tmp_path / "data"

    assert main(["gen-data", "--out", str(out), "--set", "data.colour=red"]) == 2
    assert main(["gen-data", "--out", str(out), "-c", str(tmp_path / "absent.env")]) == 2
    assert not out.exists()


def test_runtime_errors_exit_3(tiny_env, tmp_path):
    argv = ["extract", "-i", str(tmp_path / "absent.ppm"), "-o", str(tmp_path / "f.gfvq"), "-c", str(tiny_env)]
    assert main(argv) == 3


class TestThreads:
    """``--threads`` is a global option and the applied count lands in the timings CSV."""

    def _bench_args(self, tiny_env, out):
        return ["--threads", "2", "bench", "-p", "grid", "-o", str(out), "-c", str(tiny_env)]

    def test_recorded_in_timings(self, tiny_env, tmp_path, monkeypatch):
        monkeypatch.setenv("OMP_NUM_THREADS", "2")
        out = tmp_path / "timings.csv"

        assert main(self._bench_args(tiny_env, out)) == 0

        assert [row.threads for row in read_timings(out)] == [2]

    def test_script_entry(self, tiny_env, tmp_path, monkeypatch):
        monkeypatch.setenv("OMP_NUM_THREADS", "2")
        out = tmp_path / "timings.csv"
        monkeypatch.setattr(sys, "argv", ["main.py", *self._bench_args(tiny_env, out)])

        with pytest.raises(SystemExit) as exit_info:
            runpy.run_path(str(ROOT / "main.py"), run_name="__main__")

        assert exit_info.value.code == 0
        assert read_timings(out)[0].threads == 2

    @pytest.mark.parametrize("argv", [["--threads", "0", "selftest"], ["selftest", "--threads", "2"]])
    def test_invalid_placement_or_value(self, argv):
        assert main(argv) == 1


def test_cli_packages_are_declared():
    """Both packages the entry point imports are direct dependencies."""
    with open(ROOT / "pyproject.toml", "rb") as f:
        declared = {re.split(r"[<>=\[ ]", dep, maxsplit=1)[0].lower() for dep in tomllib.load(f)["project"]["dependencies"]}

    assert {"click", "typer"} <= declared
