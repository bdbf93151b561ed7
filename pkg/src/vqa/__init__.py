from src.vqa.e2e import e2e_forward, train_e2e
from src.vqa.model import VqaBatch, answer, build_vqa, soft_accuracy, vqa_forward, vqa_loss
from src.vqa.optim import Adamax, SGDMomentum, build_optimizer
from src.vqa.ppm import build_ppm, ppm
from src.vqa.render import render_attention_map
from src.vqa.train import TrainResult, VqaExample, evaluate_vqa, run_training, train_vqa, vqa_examples, write_loss_log

__all__ = [
    "e2e_forward",
    "train_e2e",
    "VqaBatch",
    "answer",
    "build_vqa",
    "soft_accuracy",
    "vqa_forward",
    "vqa_loss",
    "Adamax",
    "SGDMomentum",
    "build_optimizer",
    "build_ppm",
    "ppm",
    "render_attention_map",
    "TrainResult",
    "VqaExample",
    "evaluate_vqa",
    "run_training",
    "train_vqa",
    "vqa_examples",
    "write_loss_log",
]
