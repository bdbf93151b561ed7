from .io import atomic_write, read_jsonl, write_bytes, write_json, write_jsonl
from .weights import load_weights, save_weights
from .feature_cache import cache_path, load_cache, save_cache
from .netpbm import heatmap_to_gray, load_gray, load_image, save_pgm, save_ppm
from .progress import progress

__all__ = [
    "atomic_write",
    "read_jsonl",
    "write_bytes",
    "write_json",
    "write_jsonl",
    "load_weights",
    "save_weights",
    "cache_path",
    "load_cache",
    "save_cache",
    "heatmap_to_gray",
    "load_gray",
    "load_image",
    "save_pgm",
    "save_ppm",
    "progress",
]
