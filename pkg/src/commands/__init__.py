from src.commands.bench import bench, selftest, sweep
from src.commands.data import gen_data
from src.commands.features import answer_cmd, extract, render_attn
from src.commands.train import pretrain_cmd, train_vqa_cmd

__all__ = [
    "bench",
    "selftest",
    "sweep",
    "gen_data",
    "answer_cmd",
    "extract",
    "render_attn",
    "pretrain_cmd",
    "train_vqa_cmd",
]
