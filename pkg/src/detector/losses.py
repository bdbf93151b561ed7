from dataclasses import dataclass

import numpy as np

from src.core.errors import InvalidArgumentError
from src.detector.heads import RegionOutputs
from src.detector.targets import AnchorTargets, RoiTargets
from src.kernels import value_of

LOSS_TERMS = ("rpn_cls", "rpn_box", "cls", "box", "attr")


@dataclass
class DetectorLoss:
    total: object
    terms: dict[str, float]


def rpn_terms(t, objectness, deltas, targets: AnchorTargets) -> dict:
    """Objectness BCE over sampled anchors and smooth-L1 over positives, both per sampled anchor."""
    sampled = (targets.labels >= 0).astype(np.float64)
    normalizer = max(targets.num_sampled, 1)
    cls = t.op(
        "bce_with_logits", objectness,
        targets=(targets.labels == 1).astype(np.float64), weights=sampled, normalizer=normalizer,
    )
    positive = (targets.labels == 1).astype(np.float64)[:, None]
    box = t.op("smooth_l1", deltas, targets=targets.deltas, weights=positive, normalizer=normalizer)
    return {"rpn_cls": cls, "rpn_box": box}


def head_terms(t, outputs: RegionOutputs, targets: RoiTargets) -> dict:
    """Class CE over all sampled RoIs, box smooth-L1 over foreground, attribute CE over foreground."""
    cls = t.op("cross_entropy", outputs.class_logits, labels=targets.class_labels)
    fg = targets.foreground.astype(np.float64)[:, None]
    box = t.op("smooth_l1", outputs.box_deltas, targets=targets.deltas, weights=fg,
               normalizer=max(len(targets.class_labels), 1))
    attr = t.op("cross_entropy", outputs.attr_logits, labels=targets.attr_labels)
    return {"cls": cls, "box": box, "attr": attr}


def detector_loss(t, rpn: dict, head: dict, attr_weight: float) -> DetectorLoss:
    """
    total = rpn_cls + rpn_box + cls + box + attr_weight * attr.

    Args:
        t: Tape the terms were computed under.
        rpn (dict): ``rpn_terms`` output (or empty to skip the RPN).
        head (dict): ``head_terms`` output.
        attr_weight (float): Weight of the attribute term, >= 0.

    Returns:
        DetectorLoss: The total (a tape value) and every unweighted term as a float.
    """
    if attr_weight < 0:
        raise InvalidArgumentError(f"attribute loss weight must be >= 0, got {attr_weight}")
    terms = {**rpn, **head}
    total = None
    for name in LOSS_TERMS:
        if name not in terms:
            continue
        term = terms[name]
        if name == "attr":
            if attr_weight == 0:
                continue
            term = t.op("scale", term, factor=attr_weight)
        total = term if total is None else t.op("add", total, term)
    breakdown = {name: float(value_of(terms[name])) for name in LOSS_TERMS if name in terms}
    return DetectorLoss(total, breakdown)
