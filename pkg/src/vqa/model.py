"""
Top-down attention VQA head over a FeatureSet.

A bag-of-words question encoding attends over the N visual vectors; the
attended vector is fused with a projection of the question by elementwise
product and classified into answer logits. Everything runs on a tape over a
batch: features B x N x D, mask B x N, tokens B x L.
"""
from dataclasses import dataclass
import logging

import numpy as np

from src.core.errors import InvalidArgumentError, ShapeError
from src.kernels import NO_GRAD, value_of
from src.models.feature_set import FeatureSet
from src.schemas.vqa import VqaConfig
from src.vqa.ppm import build_ppm, ppm

logger = logging.getLogger(__name__)


@dataclass
class VqaBatch:
    features: np.ndarray      # B x N x D, or B x D x GH x GW grid maps when PPM is on
    mask: np.ndarray          # B x N
    tokens: np.ndarray        # B x L token ids, 0-padded
    token_mask: np.ndarray    # B x L
    targets: np.ndarray | None = None  # B x A soft answer scores

    @property
    def size(self) -> int:
        return len(self.tokens)


def _dense(rng, out_dim: int, in_dim: int) -> np.ndarray:
    return (rng.standard_normal((out_dim, in_dim)) * np.sqrt(1.0 / in_dim)).astype(np.float32)


def head_input_dim(feature_dim: int, config: VqaConfig) -> int:
    return config.ppm.output_channels(feature_dim) if config.ppm.enabled else feature_dim


def build_vqa(vocab_size: int, num_answers: int, feature_dim: int, config: VqaConfig, seed: int) -> dict[str, np.ndarray]:
    """
    Initialize question encoder, attention, fusion and classifier weights.

    Args:
        vocab_size (int): Token count including the unknown token.
        num_answers (int): Answer classes.
        feature_dim (int): D of the incoming FeatureSets (before PPM).
        config (VqaConfig): Layer widths and PPM settings.
        seed (int): Initialization seed.
    """
    rng = np.random.default_rng(seed)
    d = head_input_dim(feature_dim, config)
    e, q, h, c = config.embed_dim, config.question_dim, config.attention_hidden, config.classifier_hidden
    weights = {
        "vqa.embed.weight": (rng.standard_normal((vocab_size, e)) * 0.1).astype(np.float32),
        "vqa.q_proj.weight": _dense(rng, q, e),
        "vqa.q_proj.bias": np.zeros(q, np.float32),
        "vqa.att_v.weight": _dense(rng, h, d),
        "vqa.att_q.weight": _dense(rng, h, q),
        "vqa.att.bias": np.zeros(h, np.float32),
        "vqa.att_score.weight": _dense(rng, 1, h),
        "vqa.att_score.bias": np.zeros(1, np.float32),
        "vqa.q_fuse.weight": _dense(rng, d, q),
        "vqa.q_fuse.bias": np.zeros(d, np.float32),
        "vqa.cls_fc.weight": _dense(rng, c, d),
        "vqa.cls_fc.bias": np.zeros(c, np.float32),
        "vqa.cls.weight": _dense(rng, num_answers, c),
        "vqa.cls.bias": np.zeros(num_answers, np.float32),
    }
    if config.ppm.enabled:
        weights.update(build_ppm(feature_dim, config.ppm, int(rng.integers(2**31))))
    return weights


def encode_question(t, params: dict, tokens, token_mask):
    """
    Mean of the token embeddings, then linear + ReLU: B x Q.

    Raises:
        InvalidArgumentError: If some question has no tokens.
    """
    token_mask = np.asarray(token_mask, dtype=bool)
    counts = token_mask.sum(axis=1)
    if np.any(counts == 0):
        raise InvalidArgumentError("questions must contain at least one token")
    emb = t.op("embedding", params["vqa.embed.weight"], ids=np.asarray(tokens, dtype=np.int64))
    weights = (token_mask / counts[:, None]).astype(value_of(emb).dtype)[..., None]
    mean = t.op("sum", t.op("mul", emb, weights), axis=1)
    return t.op("relu", t.op("linear", mean, params["vqa.q_proj.weight"], params["vqa.q_proj.bias"]))


def top_down_attention(t, params: dict, features, mask, q):
    """
    Attention weights B x N: softmax over rows of
    w^T relu(W_v f_i + W_q q + b) + c, masked rows excluded.

    Raises:
        InvalidArgumentError: If every row of some example is masked.
    """
    mask = np.asarray(mask, dtype=bool)
    batch, rows = mask.shape
    hidden_v = t.op("linear", features, params["vqa.att_v.weight"])
    hidden_q = t.op("linear", q, params["vqa.att_q.weight"], params["vqa.att.bias"])
    hidden_q = t.op("reshape", hidden_q, shape=(batch, 1, -1))
    hidden = t.op("relu", t.op("add", hidden_v, hidden_q))
    scores = t.op("linear", hidden, params["vqa.att_score.weight"], params["vqa.att_score.bias"])
    scores = t.op("reshape", scores, shape=(batch, rows))
    return t.op("softmax", scores, axis=1, mask=mask)


def fuse_and_classify(t, params: dict, features, attention, q):
    """v = sum_i w_i f_i; logits = mlp(v * relu(W q + b))."""
    batch, rows = value_of(attention).shape
    weights = t.op("reshape", attention, shape=(batch, rows, 1))
    attended = t.op("sum", t.op("mul", features, weights), axis=1)
    q_proj = t.op("relu", t.op("linear", q, params["vqa.q_fuse.weight"], params["vqa.q_fuse.bias"]))
    joint = t.op("mul", attended, q_proj)
    hidden = t.op("relu", t.op("linear", joint, params["vqa.cls_fc.weight"], params["vqa.cls_fc.bias"]))
    return t.op("linear", hidden, params["vqa.cls.weight"], params["vqa.cls.bias"])


def grid_rows(t, grid_maps):
    """B x D x GH x GW maps -> B x (GH*GW) x D rows, row-major over cells."""
    batch, depth, gh, gw = value_of(grid_maps).shape
    flat = t.op("reshape", grid_maps, shape=(batch, depth, gh * gw))
    return t.op("transpose", flat, axes=(0, 2, 1))


def vqa_forward(t, params: dict, batch: VqaBatch, config: VqaConfig):
    """
    Answer logits (B x A) and attention (B x N) for a batch.

    With PPM enabled ``batch.features`` holds grid maps (B x D x GH x GW) that
    are pyramid-pooled before flattening into rows.
    """
    features = batch.features
    if config.ppm.enabled:
        if np.ndim(value_of(features)) != 4:
            raise ShapeError("PPM needs grid feature maps shaped B x D x GH x GW")
        features = grid_rows(t, ppm(t, params, features, config.ppm))
    if config.feature_norm:
        features = t.op("l2_normalize", features, axis=-1)
    q = encode_question(t, params, batch.tokens, batch.token_mask)
    attention = top_down_attention(t, params, features, batch.mask, q)
    return fuse_and_classify(t, params, features, attention, q), attention


def vqa_loss(t, logits, targets):
    """Binary cross-entropy with soft targets, averaged over every (example, answer)."""
    return t.op("bce_with_logits", logits, targets=np.asarray(targets, dtype=np.float64))


def soft_accuracy(logits: np.ndarray, targets: np.ndarray) -> float:
    """Mean target score of the predicted answer."""
    logits = np.asarray(logits)
    if len(logits) == 0:
        return 0.0
    predicted = logits.argmax(axis=1)
    return float(np.asarray(targets)[np.arange(len(predicted)), predicted].mean())


def stack_features(sets: list[FeatureSet], as_maps: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """
    Stack FeatureSets with equal N into (B x N x D, B x N) arrays, or grid
    sets into (B x D x GH x GW, B x N) when ``as_maps``.
    """
    if not sets:
        raise ShapeError("cannot stack an empty list of feature sets")
    sizes = {(s.num_features, s.dim) for s in sets}
    if len(sizes) != 1:
        raise ShapeError(f"feature sets in a batch must share N and D, got {sorted(sizes)}")
    mask = np.stack([s.mask for s in sets])
    if as_maps:
        return np.stack([s.to_grid_map() for s in sets]), mask
    return np.stack([s.vectors for s in sets]), mask


def pad_tokens(questions: list[list[int]]) -> tuple[np.ndarray, np.ndarray]:
    length = max(len(q) for q in questions)
    tokens = np.zeros((len(questions), length), dtype=np.int64)
    mask = np.zeros((len(questions), length), dtype=bool)
    for i, q in enumerate(questions):
        tokens[i, :len(q)] = q
        mask[i, :len(q)] = True
    return tokens, mask


def answer(params: dict, features: FeatureSet, token_ids: list[int], config: VqaConfig) -> tuple[int, np.ndarray]:
    """Predicted answer id and the attention over the set's rows, for one question."""
    vectors, mask = stack_features([features], as_maps=config.ppm.enabled)
    tokens, token_mask = pad_tokens([token_ids])
    logits, attention = vqa_forward(NO_GRAD, params, VqaBatch(vectors, mask, tokens, token_mask), config)
    return int(np.argmax(logits[0])), np.asarray(attention[0])
