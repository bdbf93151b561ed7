import numpy as np
import pytest

from src.core.errors import InvalidArgumentError
from src.detector.heads import RegionOutputs
from src.detector.losses import LOSS_TERMS, detector_loss, head_terms, rpn_terms
from src.kernels import NO_GRAD
from src.kernels.gradcheck import check_function
from src.selftest.checks import detector_loss_case, detector_loss_term


@pytest.fixture
def case(rng):
    return detector_loss_case(rng)


def _terms(params, anchor_targets, roi_targets):
    rpn = rpn_terms(NO_GRAD, params["objectness"], params["rpn_deltas"], anchor_targets)
    outputs = RegionOutputs(None, params["class_logits"], params["attr_logits"], params["box_deltas"])
    return rpn, head_terms(NO_GRAD, outputs, roi_targets)


@pytest.mark.parametrize("term", [*LOSS_TERMS, "total"])
def test_term_gradient_matches_finite_differences(case, term):
    params, anchor_targets, roi_targets = case

    result = check_function(detector_loss_term(term, anchor_targets, roi_targets), params)

    assert result.ok, f"{result.worst}: abs {result.max_abs_error:.2e}, rel {result.max_rel_error:.2e}"


def test_total_weights_the_attribute_term(case):
    rpn, head = _terms(*case)

    loss = detector_loss(NO_GRAD, rpn, head, attr_weight=0.5)

    assert set(loss.terms) == set(LOSS_TERMS)
    expected = sum(v for k, v in loss.terms.items() if k != "attr") + 0.5 * loss.terms["attr"]
    assert float(loss.total) == pytest.approx(expected)


def test_zero_attribute_weight_drops_the_term(case):
    rpn, head = _terms(*case)

    loss = detector_loss(NO_GRAD, rpn, head, attr_weight=0.0)

    assert float(loss.total) == pytest.approx(sum(v for k, v in loss.terms.items() if k != "attr"))


def test_negative_attribute_weight(case):
    rpn, head = _terms(*case)

    with pytest.raises(InvalidArgumentError):
        detector_loss(NO_GRAD, rpn, head, attr_weight=-0.1)


def test_box_terms_ignore_background(case):
    """Regression outputs of negative anchors and background RoIs carry no loss."""
    params, anchor_targets, roi_targets = case
    moved = dict(params)
    moved["rpn_deltas"] = params["rpn_deltas"] + 10.0 * (anchor_targets.labels != 1)[:, None]
    moved["box_deltas"] = params["box_deltas"] + 10.0 * (~roi_targets.foreground)[:, None]

    before = _terms(params, anchor_targets, roi_targets)
    after = _terms(moved, anchor_targets, roi_targets)

    assert float(after[0]["rpn_box"]) == pytest.approx(float(before[0]["rpn_box"]))
    assert float(after[1]["box"]) == pytest.approx(float(before[1]["box"]))
