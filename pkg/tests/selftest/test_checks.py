import numpy as np
import pytest

from src.core.errors import ShapeError
from src.kernels.gradcheck import GradcheckResult
from src.selftest import checks
from src.selftest.checks import CHECKS, Trials, run_selftest

PASSED = GradcheckResult(0.0, 0.0, "", True)


def test_single_check():
    results = run_selftest(only=["grid_count"])

    assert [r.name for r in results] == ["grid_count"]
    assert results[0].ok, results[0].detail


def test_errors_become_failed_results(monkeypatch):
    def broken(rng, trials):
        raise ShapeError("bad extent")

    monkeypatch.setitem(checks.CHECKS, "broken", broken)

    (result,) = run_selftest(only=["broken"])

    assert not result.ok
    assert result.detail == "ShapeError: bad extent"


def test_trial_counts():
    assert Trials.for_mode(True) == Trials(1000, 500, 100, 50, 100)
    assert Trials.for_mode(False).nms < Trials.for_mode(True).nms


@pytest.mark.slow
@pytest.mark.parametrize("name", list(CHECKS))
def test_quick_suite(name):
    (result,) = run_selftest(seed=3, only=[name])
    assert result.ok, result.detail


@pytest.mark.acceptance
def test_full_suite():
    results = run_selftest(full=True)
    assert all(r.ok for r in results), [r for r in results if not r.ok]


def test_detector_loss_check_covers_every_term():
    (result,) = run_selftest(only=["detector_loss_gradients"])

    assert result.ok, result.detail
    assert result.detail.startswith("5 terms and the total")


def test_kernel_gradients_run_once_per_seed(monkeypatch):
    seen = []
    monkeypatch.setattr(checks, "check_kernel", lambda op_id, *args, seed=0: seen.append(seed) or PASSED)

    ok, detail = checks.check_kernel_gradients(np.random.default_rng(0), Trials(1, 1, 1, 1, 4))

    assert ok
    assert sorted(set(seen)) == [0, 1, 2, 3]
    assert detail.endswith("over 4 seeds")
