from src.detector.anchors import generate_anchors
from src.detector.boxes import decode_box, decode_deltas, encode_deltas, iou, pairwise_iou
from src.detector.evaluation import evaluate_detection_ap
from src.detector.heads import RegionOutputs, feature_dim, region_features
from src.detector.losses import DetectorLoss, detector_loss
from src.detector.model import build_detector, detect, extract_regions, region_candidates, select_regions, shared_map
from src.detector.nms import nms
from src.detector.pretrain import PRETRAIN_MODES, PretrainSample, pretrain
from src.detector.rpn import Proposals, rpn_propose
from src.detector.selection import RegionSelection, select_top_regions

__all__ = [
    "generate_anchors",
    "decode_box",
    "decode_deltas",
    "encode_deltas",
    "iou",
    "pairwise_iou",
    "evaluate_detection_ap",
    "RegionOutputs",
    "feature_dim",
    "region_features",
    "DetectorLoss",
    "detector_loss",
    "build_detector",
    "detect",
    "extract_regions",
    "region_candidates",
    "select_regions",
    "shared_map",
    "nms",
    "PRETRAIN_MODES",
    "PretrainSample",
    "pretrain",
    "Proposals",
    "rpn_propose",
    "RegionSelection",
    "select_top_regions",
]
