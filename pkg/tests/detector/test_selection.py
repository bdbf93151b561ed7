import numpy as np
import pytest

from src.core.errors import InvalidArgumentError, ShapeError
from src.detector import evaluate_detection_ap, select_top_regions
from src.models.box import Box, Detection, GroundTruth

# A and B overlap heavily (IoU 0.82); C is far away
BOXES = np.array([[0, 0, 10, 10], [1, 0, 11, 10], [50, 50, 60, 60]], dtype=np.float64)
SCORES = np.array([[0.9, 0.1], [0.8, 0.6], [0.2, 0.3]])


class TestSelectTopRegions:

    def test_region_keeps_best_class_it_survived_in(self):
        """B loses class 0 to A but survives class 1; C scores best in class 1."""
        selection = select_top_regions(BOXES, SCORES, n=5, class_nms_iou=0.3)

        assert selection.indices.tolist() == [0, 1, 2]
        np.testing.assert_allclose(selection.scores, [0.9, 0.6, 0.3])
        assert selection.class_ids.tolist() == [0, 1, 1]

    def test_mask_marks_survivors_of_n_rows(self):
        selection = select_top_regions(BOXES, SCORES, n=5, class_nms_iou=0.3)
        assert selection.mask.tolist() == [True, True, True, False, False]

    def test_top_n_truncates(self):
        selection = select_top_regions(BOXES, SCORES, n=2, class_nms_iou=0.3)

        assert selection.indices.tolist() == [0, 1]
        assert selection.mask.all()

    def test_score_threshold(self):
        selection = select_top_regions(BOXES, SCORES, n=5, class_nms_iou=0.3, score_thresh=0.5)
        assert selection.indices.tolist() == [0, 1]

    def test_feature_set_pads_with_masked_zero_rows(self, rng):
        vectors = rng.standard_normal((3, 4))
        selection = select_top_regions(BOXES, SCORES, n=5, class_nms_iou=0.3)

        features = selection.feature_set(vectors, BOXES, (64, 64))

        assert features.kind == "region" and features.num_features == 5
        np.testing.assert_allclose(features.vectors[:3], vectors[[0, 1, 2]], rtol=1e-6)
        assert not features.vectors[3:].any() and not features.boxes[3:].any()

    def test_no_candidates(self):
        selection = select_top_regions(np.zeros((0, 4)), np.zeros((0, 3)), n=4, class_nms_iou=0.3)

        assert len(selection.indices) == 0
        assert not selection.mask.any()

    def test_n_must_be_positive(self):
        with pytest.raises(InvalidArgumentError):
            select_top_regions(BOXES, SCORES, n=0, class_nms_iou=0.3)

    def test_score_rows_must_match_boxes(self):
        with pytest.raises(ShapeError):
            select_top_regions(BOXES, SCORES[:2], n=2, class_nms_iou=0.3)

    def test_detections(self):
        selection = select_top_regions(BOXES, SCORES, n=2, class_nms_iou=0.3)

        detections = selection.detections(BOXES, np.full((3, 2), 0.5))

        assert [d.class_id for d in detections] == [0, 1]
        assert detections[0].box == Box(0, 0, 10, 10)
        assert detections[1].score == pytest.approx(0.6)


def _gt(*boxes, class_id=0) -> GroundTruth:
    count = len(boxes)
    return GroundTruth(np.array(boxes, dtype=np.float64).reshape(-1, 4), np.full(count, class_id), np.zeros(count, np.int64))


class TestDetectionAP:

    def test_perfect_detections(self):
        detections = [[Detection(Box(0, 0, 10, 10), 0, 0.9)], [Detection(Box(5, 5, 20, 20), 0, 0.7)]]

        result = evaluate_detection_ap(detections, [_gt([0, 0, 10, 10]), _gt([5, 5, 20, 20])])

        assert result["mean"] == pytest.approx(1.0)

    def test_confident_false_positive_halves_ap(self):
        detections = [[Detection(Box(30, 30, 40, 40), 0, 0.9), Detection(Box(0, 0, 10, 10), 0, 0.8)]]

        result = evaluate_detection_ap(detections, [_gt([0, 0, 10, 10])])

        assert result["per_class"][0] == pytest.approx(0.5)

    def test_duplicate_detection_counts_once(self):
        detections = [[Detection(Box(0, 0, 10, 10), 0, 0.9), Detection(Box(0, 0, 10, 10), 0, 0.8)]]

        result = evaluate_detection_ap(detections, [_gt([0, 0, 10, 10])])

        assert result["per_class"][0] == pytest.approx(1.0)

    def test_class_without_detections_scores_zero(self):
        result = evaluate_detection_ap([[]], [_gt([0, 0, 10, 10], class_id=2)])
        assert result["per_class"] == {2: 0.0}

    def test_threshold_must_be_open_interval(self):
        with pytest.raises(InvalidArgumentError):
            evaluate_detection_ap([[]], [_gt()], iou_thresh=1.0)
