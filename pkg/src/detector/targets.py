"""Training-time label assignment for anchors and RoIs (uniform random sampling)."""
from dataclasses import dataclass

import numpy as np

from src.detector.boxes import encode_deltas, pairwise_iou
from src.models.box import GroundTruth
from src.schemas.detector import RegionHeadConfig, RpnConfig


@dataclass(frozen=True, eq=False)
class AnchorTargets:
    labels: np.ndarray       # 1 positive, 0 negative, -1 ignored
    deltas: np.ndarray       # A x 4, meaningful where labels == 1

    @property
    def num_sampled(self) -> int:
        return int((self.labels >= 0).sum())


@dataclass(frozen=True, eq=False)
class RoiTargets:
    rois: np.ndarray         # S x 4
    class_labels: np.ndarray  # 0 background, c + 1 for class c
    attr_labels: np.ndarray   # attribute id, -1 for background
    deltas: np.ndarray       # S x 4 regression targets
    foreground: np.ndarray   # S bools


def _subsample(candidates: np.ndarray, limit: int, rng: np.random.Generator) -> np.ndarray:
    if len(candidates) <= limit:
        return candidates
    return np.sort(rng.choice(candidates, size=limit, replace=False))


def assign_anchor_targets(anchors: np.ndarray, gt: GroundTruth, config: RpnConfig,
                          rng: np.random.Generator) -> AnchorTargets:
    """
    Label anchors for the RPN losses.

    An anchor is positive when its best IoU with a ground-truth box is at
    least ``fg_iou`` or it is the best anchor of some box; negative below
    ``bg_iou``; ignored otherwise. Up to ``batch_size_per_image`` labelled
    anchors are kept, at most ``positive_fraction`` of them positive.
    """
    labels = np.full(len(anchors), -1, dtype=np.int64)
    deltas = np.zeros((len(anchors), 4))
    if len(gt) == 0:
        labels[:] = 0
    else:
        overlaps = pairwise_iou(anchors, gt.boxes)
        best_gt = overlaps.argmax(axis=1)
        best_iou = overlaps.max(axis=1)
        labels[best_iou < config.bg_iou] = 0
        per_gt_best = overlaps.max(axis=0)
        for j, value in enumerate(per_gt_best):
            if value > 0:
                labels[overlaps[:, j] == value] = 1
        labels[best_iou >= config.fg_iou] = 1
        positive = labels == 1
        deltas[positive] = encode_deltas(anchors[positive], gt.boxes[best_gt[positive]])

    max_positive = int(config.batch_size_per_image * config.positive_fraction)
    positives = np.flatnonzero(labels == 1)
    kept_positive = _subsample(positives, max_positive, rng)
    labels[np.setdiff1d(positives, kept_positive)] = -1
    negatives = np.flatnonzero(labels == 0)
    kept_negative = _subsample(negatives, config.batch_size_per_image - len(kept_positive), rng)
    labels[np.setdiff1d(negatives, kept_negative)] = -1
    return AnchorTargets(labels, deltas)


def assign_roi_targets(proposals: np.ndarray, gt: GroundTruth, config: RegionHeadConfig,
                       rng: np.random.Generator) -> RoiTargets:
    """
    Sample RoIs for the region head.

    Ground-truth boxes are appended to the proposals; RoIs with IoU >=
    ``fg_iou`` take their box's class and attribute, the rest are background.
    ``roi_batch_size`` RoIs are sampled with at most ``fg_fraction`` foreground.
    """
    rois = np.concatenate([np.asarray(proposals, dtype=np.float64).reshape(-1, 4), gt.boxes.reshape(-1, 4)])
    if len(gt) == 0:
        picked = _subsample(np.arange(len(rois)), config.roi_batch_size, rng)
        empty = np.zeros(len(picked), dtype=np.int64)
        return RoiTargets(rois[picked], empty, empty - 1, np.zeros((len(picked), 4)), np.zeros(len(picked), bool))
    overlaps = pairwise_iou(rois, gt.boxes)
    best_gt = overlaps.argmax(axis=1)
    best_iou = overlaps.max(axis=1)
    fg = _subsample(np.flatnonzero(best_iou >= config.fg_iou), round(config.roi_batch_size * config.fg_fraction), rng)
    bg = _subsample(np.flatnonzero(best_iou < config.fg_iou), config.roi_batch_size - len(fg), rng)
    picked = np.concatenate([fg, bg])
    foreground = np.zeros(len(picked), dtype=bool)
    foreground[:len(fg)] = True
    matched = best_gt[picked]
    class_labels = np.where(foreground, gt.class_ids[matched] + 1, 0)
    attr_labels = np.where(foreground, gt.attribute_ids[matched], -1)
    deltas = np.zeros((len(picked), 4))
    if len(fg):
        deltas[:len(fg)] = encode_deltas(rois[fg], gt.boxes[matched[:len(fg)]])
    return RoiTargets(rois[picked], class_labels, attr_labels, deltas, foreground)
