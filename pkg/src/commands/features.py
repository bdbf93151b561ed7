import json
import logging
from pathlib import Path
from typing import Annotated, Optional

import numpy as np
import typer

from src.bench.pipelines import extract_features, prepare_image
from src.commands.common import ConfigOption, SeedOption, SetOption, VerboseOption, parse_size, resolve
from src.commands.train import PipelineOption, check_pipeline, visual_weights
from src.data.dataset import load_vocabulary
from src.data.questions import tokenize
from src.utils.feature_cache import load_cache, save_cache
from src.utils.netpbm import heatmap_to_gray, load_image, save_pgm
from src.utils.weights import load_weights
from src.vqa.model import answer
from src.vqa.render import render_attention_map

logger = logging.getLogger(__name__)

WeightsOption = Annotated[Optional[Path], typer.Option("--weights", "-w", help="Detector / backbone GFWT.")]


def extract(
    in_path: Annotated[Path, typer.Option("--in", "-i", help="Input image (PPM or anything Pillow reads).")],
    out: Annotated[Path, typer.Option("--out", "-o", help="GFVQ feature file.")],
    pipeline: PipelineOption = "grid",
    weights: WeightsOption = None,
    n: Annotated[Optional[int], typer.Option("--n", help="Region rows (detector.num_regions).")] = None,
    size: Annotated[Optional[str], typer.Option(help="Fixed HxW input size instead of the 600/1000 rule.")] = None,
    config: ConfigOption = None,
    overrides: SetOption = None,
    seed: SeedOption = None,
    verbose: VerboseOption = False,
) -> None:
    """Extract region or grid features of one image into a GFVQ file."""
    check_pipeline(pipeline)
    fixed = parse_size(size) if size else None
    resolved = resolve(config, overrides, seed, extra={"detector.num_regions": n}, verbose=verbose)
    tensor, _ = prepare_image(load_image(in_path), resolved, fixed)
    features = extract_features(tensor, pipeline, visual_weights(weights, pipeline, resolved), resolved)
    save_cache(features, out)
    typer.echo(f"{features.kind} features: N={features.num_features} D={features.dim} -> {out}")


def answer_cmd(
    image: Annotated[Path, typer.Option("--image", "-i", help="Input image.")],
    question: Annotated[str, typer.Option("--question", "-q", help="Question text.")],
    vqa_weights: Annotated[Path, typer.Option(help="VQA head GFWT written by train-vqa.")],
    vocab: Annotated[Optional[Path], typer.Option(help="Vocabulary JSON; defaults to <vqa-weights>.vocab.json.")] = None,
    pipeline: PipelineOption = "grid",
    weights: WeightsOption = None,
    heatmap: Annotated[Optional[Path], typer.Option(help="Also write the attention heatmap as PGM.")] = None,
    config: ConfigOption = None,
    overrides: SetOption = None,
    seed: SeedOption = None,
    verbose: VerboseOption = False,
) -> None:
    """Answer one question about one image."""
    check_pipeline(pipeline)
    resolved = resolve(config, overrides, seed, verbose=verbose)
    vocabulary = load_vocabulary(vocab or vqa_weights.with_suffix(".vocab.json"))
    tensor, _ = prepare_image(load_image(image), resolved)
    features = extract_features(tensor, pipeline, visual_weights(weights, pipeline, resolved), resolved)
    tokens = tokenize(question)
    if not tokens:
        raise typer.BadParameter("the question has no words")
    answer_id, attention = answer(load_weights(vqa_weights), features, vocabulary.encode(tokens), resolved.vqa)
    if heatmap is not None:
        save_pgm(heatmap_to_gray(render_attention_map(attention, features)), heatmap)
    typer.echo(vocabulary.answer_list[answer_id])


def parse_attention(text: str) -> np.ndarray:
    """A JSON list file, or comma-separated weights inline."""
    path = Path(text)
    try:
        if path.is_file():
            return np.asarray(json.loads(path.read_text(encoding="utf-8")), dtype=np.float64).reshape(-1)
        return np.asarray([float(v) for v in text.split(",") if v.strip()], dtype=np.float64)
    except (ValueError, TypeError) as e:
        raise typer.BadParameter(f"cannot read attention weights from {text!r}: {e}") from e


def render_attn(
    features: Annotated[Path, typer.Option("--features", "-f", help="GFVQ file supplying the geometry.")],
    attention: Annotated[str, typer.Option("--attention", "-a", help="JSON list file or comma-separated weights.")],
    out: Annotated[Path, typer.Option("--out", "-o", help="PGM heatmap.")],
) -> None:
    """Render per-row attention as a grayscale heatmap over the image."""
    weights = parse_attention(attention)
    heat = render_attention_map(weights, load_cache(features))
    save_pgm(heatmap_to_gray(heat), out)
    typer.echo(f"{heat.shape[0]}x{heat.shape[1]} heatmap -> {out}")
