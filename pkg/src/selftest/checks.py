"""
In-process oracle and invariant suite behind ``gridfeat selftest``.

Each check returns a CheckResult instead of raising, so one broken kernel
does not hide the state of the others. ``full=True`` runs the trial counts
the acceptance bar asks for; the default is a quicker pass.
"""
from dataclasses import dataclass
import logging
import time
from typing import Callable

import numpy as np

from src.backbone.resnet import build_backbone, forward_c5, forward_to_c4, grid_count
from src.core.errors import GridFeatError
from src.detector.heads import RegionOutputs
from src.detector.losses import LOSS_TERMS, detector_loss, head_terms, rpn_terms
from src.detector.nms import nms
from src.detector.targets import AnchorTargets, RoiTargets
from src.kernels import ConvSpec, conv2d, roi_pool
from src.kernels.gradcheck import check_function, check_kernel
from src.kernels.tape import NO_GRAD
from src.models.feature_set import FeatureSet
from src.schemas.backbone import BackboneConfig
from src.schemas.vqa import PPMConfig, VqaConfig
from src.selftest.oracles import bin_scan_roi_pool, brute_force_nms, naive_conv2d, random_boxes, zero_inserted_kernel
from src.utils.feature_cache import decode_features, encode_features
from src.utils.weights import decode_weights, encode_weights
from src.vqa.model import VqaBatch, build_vqa, vqa_forward, vqa_loss
from src.vqa.render import render_attention_map

logger = logging.getLogger(__name__)

GRID_COUNT_TABLE: dict[tuple[int, int], int] = {
    (448, 448): 196,
    (448, 746): 336,
    (600, 1000): 608,
    (800, 1333): 1050,
    (64, 64): 4,
}


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str
    seconds: float = 0.0


@dataclass(frozen=True)
class Trials:
    nms: int
    roi_boxes: int
    conv_shapes: int
    dilation_inputs: int
    gradient_seeds: int

    @classmethod
    def for_mode(cls, full: bool) -> "Trials":
        return cls(1000, 500, 100, 50, 100) if full else cls(100, 60, 12, 4, 3)


def check_grid_counts(rng: np.random.Generator, trials: Trials) -> tuple[bool, str]:
    wrong = {size: grid_count(*size) for size, expected in GRID_COUNT_TABLE.items() if grid_count(*size) != expected}
    return not wrong, f"mismatches: {wrong}" if wrong else f"{len(GRID_COUNT_TABLE)} sizes match"


def check_nms(rng: np.random.Generator, trials: Trials) -> tuple[bool, str]:
    for trial in range(trials.nms):
        boxes = random_boxes(rng, 50)
        scores = rng.random(50)
        thresh = float(rng.choice([0.3, 0.5, 0.7]))
        fast = nms(boxes, scores, thresh).tolist()
        slow = brute_force_nms(boxes.tolist(), scores.tolist(), thresh)
        if fast != slow:
            return False, f"instance {trial} (iou {thresh}): kept {fast} vs reference {slow}"
    return True, f"{trials.nms} random 50-box instances"


def check_roi_pool(rng: np.random.Generator, trials: Trials) -> tuple[bool, str]:
    checked = 0
    while checked < trials.roi_boxes:
        height, width = (int(v) for v in rng.integers(3, 12, size=2))
        stride = float(rng.choice([8, 16]))
        output_size = int(rng.integers(1, 5))
        feature_map = rng.standard_normal((3, height, width))
        # box origins stay on the map so no box projects fully outside it
        boxes = random_boxes(rng, 10, extent=(min(height, width) - 1) * stride)
        fast = roi_pool(feature_map, boxes, output_size, stride)
        for r, box in enumerate(boxes):
            slow = bin_scan_roi_pool(feature_map, box, output_size, stride)
            if not np.array_equal(fast[r], slow):
                return False, f"box {box.round(2).tolist()} on {height}x{width} stride {stride}: pooled values differ"
        checked += len(boxes)
    return True, f"{checked} random boxes"


def check_conv2d(rng: np.random.Generator, trials: Trials) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(trials.conv_shapes):
        channels, out_channels = (int(v) for v in rng.integers(1, 4, size=2))
        kernel = int(rng.choice([1, 3]))
        spec = ConvSpec(stride=int(rng.integers(1, 3)), dilation=int(rng.integers(1, 3)), padding=int(rng.integers(0, 3)))
        size = (kernel - 1) * spec.dilation + int(rng.integers(1, 6))
        x = rng.standard_normal((channels, size, size + 1))
        weight = rng.standard_normal((out_channels, channels, kernel, kernel))
        bias = rng.standard_normal(out_channels)
        fast = conv2d(x, weight, bias, spec)
        slow = naive_conv2d(x, weight, bias, spec.stride, spec.padding, spec.dilation)
        if fast.shape != slow.shape:
            return False, f"{spec}: shape {fast.shape} vs {slow.shape}"
        worst = max(worst, float(np.abs(fast - slow).max()))
        if spec.dilation > 1:
            expanded = conv2d(x, zero_inserted_kernel(weight, spec.dilation), bias, ConvSpec(spec.stride, 1, spec.padding))
            worst = max(worst, float(np.abs(fast - expanded).max()))
    return worst <= 1e-6, f"{trials.conv_shapes} random shapes, max abs error {worst:.2e}"


def check_dilation(rng: np.random.Generator, trials: Trials) -> tuple[bool, str]:
    config = BackboneConfig(stage_channels=[4, 4, 8, 8, 8])
    weights = {k: v.astype(np.float64) for k, v in build_backbone(config, int(rng.integers(2**31))).items()}
    worst = 0.0
    for _ in range(trials.dilation_inputs):
        height, width = (int(v) * 32 for v in rng.integers(1, 4, size=2))
        c4 = forward_to_c4(rng.standard_normal((3, height, width)), weights, config)
        standard = forward_c5(c4, weights, config, mode="standard")
        dilated = forward_c5(c4, weights, config, mode="dilated")[..., ::2, ::2]
        if dilated.shape != standard.shape:
            return False, f"{height}x{width}: {dilated.shape} vs {standard.shape}"
        rel = np.abs(dilated - standard).max() / max(float(np.abs(standard).max()), 1e-12)
        worst = max(worst, float(rel))
    return worst <= 1e-5, f"{trials.dilation_inputs} inputs, max relative error {worst:.2e}"


def kernel_cases(rng: np.random.Generator) -> list[tuple[str, list, dict, list[int] | None]]:
    """(op id, inputs, attrs, wrt) for every registered kernel."""
    away_from_zero = rng.uniform(0.1, 1.0, size=(3, 4)) * rng.choice([-1, 1], size=(3, 4))
    # smooth-L1 residuals on both branches, away from the |d| = 1 kink
    box_targets = rng.standard_normal((5, 4))
    residuals = rng.choice([0.2, 0.6, 1.4, 2.5], size=(5, 4)) * rng.choice([-1, 1], size=(5, 4))
    return [
        ("conv2d", [rng.standard_normal((3, 8, 8)), rng.standard_normal((2, 3, 3, 3)), rng.standard_normal(2)],
         {"spec": ConvSpec(padding=1)}, None),
        ("conv2d", [rng.standard_normal((1, 2, 7, 7)), rng.standard_normal((2, 2, 3, 3))],
         {"spec": ConvSpec(stride=2, dilation=2, padding=2)}, None),
        ("linear", [rng.standard_normal((4, 5)), rng.standard_normal((3, 5)), rng.standard_normal(3)], {}, None),
        ("relu", [away_from_zero], {}, None),
        ("softmax", [rng.standard_normal((2, 5))], {"axis": -1, "mask": np.array([[1, 1, 0, 1, 0], [1, 1, 1, 1, 1]], bool)}, None),
        ("batchnorm_infer", [rng.standard_normal((2, 3, 4)), rng.standard_normal(2), rng.uniform(0.5, 2, 2),
                             rng.standard_normal(2), rng.standard_normal(2)], {}, None),
        ("l2_normalize", [rng.standard_normal((3, 4))], {"axis": -1}, None),
        ("max_pool2d", [rng.permutation(32).reshape(2, 4, 4) * 0.1], {"kernel_size": 2, "stride": 2}, None),
        ("max_pool2d", [rng.permutation(50).reshape(2, 5, 5) * 0.1], {"kernel_size": 3, "stride": 2, "padding": 1}, None),
        ("adaptive_avg_pool2d", [rng.standard_normal((2, 5, 5))], {"out_h": 2, "out_w": 3}, None),
        ("upsample_nearest", [rng.standard_normal((2, 3, 3))], {"out_h": 6, "out_w": 5}, None),
        ("roi_pool", [rng.permutation(72).reshape(2, 6, 6) * 0.1],
         {"boxes": np.array([[0, 0, 40, 40], [8, 8, 90, 70]]), "output_size": 2, "stride": 16}, None),
        ("roi_pool", [rng.standard_normal((2, 6, 6))],
         {"boxes": np.array([[0, 0, 40, 40]]), "output_size": 2, "stride": 16, "reduction": "mean"}, None),
        ("add", [rng.standard_normal((3, 4)), rng.standard_normal(4)], {}, None),
        ("mul", [rng.standard_normal((2, 3, 4)), rng.standard_normal((2, 1, 4))], {}, None),
        ("scale", [rng.standard_normal((3, 4))], {"factor": 0.25}, None),
        ("sum", [rng.standard_normal((2, 3, 4))], {"axis": 1}, None),
        ("mean", [rng.standard_normal((2, 3, 4))], {"axis": (0, 2), "keepdims": True}, None),
        ("reshape", [rng.standard_normal((2, 6))], {"shape": (3, 4)}, None),
        ("transpose", [rng.standard_normal((2, 3, 4))], {"axes": (0, 2, 1)}, None),
        ("concat", [rng.standard_normal((2, 3)), rng.standard_normal((2, 2))], {"axis": 1}, None),
        ("embedding", [rng.standard_normal((5, 3))], {"ids": np.array([[0, 4, 4], [2, 1, 0]])}, None),
        ("mask_fill", [rng.standard_normal((2, 4))], {"mask": np.array([[1, 0, 1, 0], [0, 0, 1, 1]], bool)}, None),
        ("bce_with_logits", [rng.standard_normal((3, 4))], {"targets": rng.random((3, 4))}, None),
        ("cross_entropy", [rng.standard_normal((4, 5))], {"labels": np.array([0, 2, -1, 4])}, None),
        ("smooth_l1", [box_targets + residuals], {"targets": box_targets}, None),
    ]


def check_kernel_gradients(rng: np.random.Generator, trials: Trials) -> tuple[bool, str]:
    failures = []
    checked = 0
    for trial in range(trials.gradient_seeds):
        for op_id, inputs, attrs, wrt in kernel_cases(rng):
            result = check_kernel(op_id, inputs, attrs, wrt, seed=trial)
            checked += 1
            if not result.ok:
                failures.append(f"trial {trial}: {result.worst} (rel {result.max_rel_error:.1e})")
    return not failures, f"failed: {failures}" if failures else f"{checked} kernel cases over {trials.gradient_seeds} seeds"


def detector_loss_case(rng: np.random.Generator, anchors: int = 6, rois: int = 5, classes: int = 3,
                       attributes: int = 4) -> tuple[dict[str, np.ndarray], AnchorTargets, RoiTargets]:
    """Toy RPN and head outputs with sampled targets covering positives, negatives and ignored rows."""
    labels = np.resize([1, 0, -1, 1, 0, 0], anchors)
    foreground = np.resize([True, False, True, True, False], rois)
    class_labels = np.where(foreground, rng.integers(1, classes + 1, size=rois), 0)
    params = {
        "objectness": rng.standard_normal(anchors),
        "rpn_deltas": rng.standard_normal((anchors, 4)),
        "class_logits": rng.standard_normal((rois, classes + 1)),
        "attr_logits": rng.standard_normal((rois, attributes)),
        "box_deltas": rng.standard_normal((rois, 4)),
    }
    anchor_targets = AnchorTargets(labels, rng.standard_normal((anchors, 4)))
    roi_targets = RoiTargets(
        rois=np.zeros((rois, 4)),
        class_labels=class_labels,
        attr_labels=np.where(foreground, rng.integers(0, attributes, size=rois), -1),
        deltas=rng.standard_normal((rois, 4)),
        foreground=foreground,
    )
    return params, anchor_targets, roi_targets


def detector_loss_term(name: str, anchor_targets: AnchorTargets, roi_targets: RoiTargets, attr_weight: float = 0.5):
    """``fn(tape, params)`` for one of LOSS_TERMS, or the weighted total for ``"total"``."""
    def fn(t, p):
        rpn = rpn_terms(t, p["objectness"], p["rpn_deltas"], anchor_targets)
        outputs = RegionOutputs(None, p["class_logits"], p["attr_logits"], p["box_deltas"])
        head = head_terms(t, outputs, roi_targets)
        if name == "total":
            return detector_loss(t, rpn, head, attr_weight).total
        return {**rpn, **head}[name]
    return fn


def check_detector_loss_gradients(rng: np.random.Generator, trials: Trials) -> tuple[bool, str]:
    params, anchor_targets, roi_targets = detector_loss_case(rng)
    worst = 0.0
    for name in (*LOSS_TERMS, "total"):
        result = check_function(detector_loss_term(name, anchor_targets, roi_targets), params)
        if not result.ok:
            return False, f"{name}: {result.worst} (rel {result.max_rel_error:.1e})"
        worst = max(worst, result.max_rel_error)
    return True, f"{len(LOSS_TERMS)} terms and the total, max relative error {worst:.1e}"


def tiny_head_config(ppm_enabled: bool) -> VqaConfig:
    return VqaConfig(embed_dim=4, question_dim=5, attention_hidden=4, classifier_hidden=6,
                     ppm=PPMConfig(enabled=ppm_enabled, pool_sizes=[1, 2], proj_dim=2))


def check_head_gradient(rng: np.random.Generator, trials: Trials) -> tuple[bool, str]:
    worst = []
    for ppm_enabled in (False, True):
        config = tiny_head_config(ppm_enabled)
        params = build_vqa(6, 3, 3, config, int(rng.integers(2**31)))
        features = rng.standard_normal((2, 3, 2, 2)) if ppm_enabled else rng.standard_normal((2, 4, 3))
        mask = np.array([[1, 1, 1, 1], [1, 1, 0, 0]], bool)
        if ppm_enabled:
            mask[:] = True
        batch = VqaBatch(features, mask, np.array([[1, 2, 3], [4, 5, 0]]), np.array([[1, 1, 1], [1, 1, 0]], bool))
        targets = rng.random((2, 3))

        def loss(t, p):
            logits, _ = vqa_forward(t, p, batch, config)
            return vqa_loss(t, logits, targets)

        result = check_function(loss, params)
        if not result.ok:
            return False, f"ppm={ppm_enabled}: {result.worst} (rel {result.max_rel_error:.1e})"
        worst.append(result.max_rel_error)
    return True, f"head with and without PPM, max relative error {max(worst):.1e}"


def check_attention(rng: np.random.Generator, trials: Trials) -> tuple[bool, str]:
    config = tiny_head_config(False)
    params = build_vqa(6, 3, 3, config, int(rng.integers(2**31)))
    mask = np.array([[1, 1, 1, 0, 0], [1, 0, 1, 0, 1]], bool)
    batch = VqaBatch(rng.standard_normal((2, 5, 3)), mask, np.array([[1, 2], [3, 0]]), np.array([[1, 1], [1, 0]], bool))
    _, attention = vqa_forward(NO_GRAD, params, batch, config)
    if np.any(attention < 0) or np.any(attention[~mask] != 0):
        return False, "negative weight or weight on a padded row"
    if np.abs(attention.sum(axis=1) - 1).max() > 1e-6:
        return False, f"row sums {attention.sum(axis=1)}"
    grid = FeatureSet.from_grid(np.zeros((2, 2, 3)), 32, (64, 96))
    heat = render_attention_map(np.eye(6)[4], grid)
    if heat.min() < 0 or heat.max() > 1 or int(heat.sum()) != 32 * 32 or heat[32:, 32:64].min() != 1.0:
        return False, "one-hot grid attention does not light exactly one stride block"
    if not np.all(render_attention_map(np.full(6, 1 / 6), grid) == 0.5):
        return False, "constant attention does not render as 0.5"
    return True, "weights normalized, padded rows zero, rendering in [0, 1]"


def check_round_trips(rng: np.random.Generator, trials: Trials) -> tuple[bool, str]:
    weights = {"a.weight": rng.standard_normal((3, 2, 1, 1)).astype(np.float32), "b": np.arange(4, dtype=np.float32)}
    blob = encode_weights(weights)
    decoded = decode_weights(blob)
    if encode_weights(decoded) != blob or any(not np.array_equal(decoded[k], v) for k, v in weights.items()):
        return False, "GFWT round-trip changed the weights"
    region = FeatureSet.from_regions(rng.standard_normal((3, 4)), random_boxes(rng, 3), [True, True, False], (40, 60))
    grid = FeatureSet.from_grid(rng.standard_normal((4, 2, 3)), 32, (64, 96))
    for features in (region, grid):
        blob = encode_features(features)
        if encode_features(decode_features(blob)) != blob:
            return False, f"GFVQ {features.kind} round-trip is not bitwise"
    return True, "GFWT and GFVQ round-trip bitwise"


CHECKS: dict[str, Callable[[np.random.Generator, Trials], tuple[bool, str]]] = {
    "grid_count": check_grid_counts,
    "nms_vs_brute_force": check_nms,
    "roi_pool_vs_bin_scan": check_roi_pool,
    "conv2d_vs_six_loop": check_conv2d,
    "dilation_conversion": check_dilation,
    "kernel_gradients": check_kernel_gradients,
    "detector_loss_gradients": check_detector_loss_gradients,
    "vqa_head_gradient": check_head_gradient,
    "attention_contracts": check_attention,
    "format_round_trips": check_round_trips,
}


def run_selftest(seed: int = 0, full: bool = False, only: list[str] | None = None) -> list[CheckResult]:
    """
    Run the named checks (all by default) with a seeded generator each.

    A check that raises a GridFeatError is reported as failed with the error
    detail; anything else propagates.
    """
    trials = Trials.for_mode(full)
    results = []
    for index, (name, check) in enumerate(CHECKS.items()):
        if only and name not in only:
            continue
        rng = np.random.default_rng([seed, index])
        start = time.perf_counter()
        try:
            ok, detail = check(rng, trials)
        except GridFeatError as e:
            ok, detail = False, f"{type(e).__name__}: {e.detail}"
        result = CheckResult(name, ok, detail, time.perf_counter() - start)
        (logger.info if ok else logger.error)(f"{name}: {'ok' if ok else 'FAILED'} ({detail})")
        results.append(result)
    return results
