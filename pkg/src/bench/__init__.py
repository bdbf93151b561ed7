from src.bench.pipelines import extract_features, prepare_image, random_weights
from src.bench.report import SweepLog, read_timings, sweep_report, timings_report, write_timings
from src.bench.sweeps import SWEEPS, Experiment, run_sweep
from src.bench.timing import STAGES, time_pipeline

__all__ = [
    "extract_features",
    "prepare_image",
    "random_weights",
    "SweepLog",
    "read_timings",
    "sweep_report",
    "timings_report",
    "write_timings",
    "SWEEPS",
    "Experiment",
    "run_sweep",
    "STAGES",
    "time_pipeline",
]
