"""
Templated questions over a SceneSpec.

Answers come from the scene description, never from pixels, and every pair
keeps its structured query so the answer can be re-derived later.
"""
from collections import Counter
import re
from typing import Sequence

import numpy as np

from src.core.errors import LabelError
from src.models.scene import COLORS, SHAPES, QAPair, SceneSpec

QUESTION_TYPES: tuple[str, ...] = ("existence", "color-query", "count", "spatial")
RELATIONS: tuple[str, ...] = ("left", "above")


def _existence(scene: SceneSpec, rng: np.random.Generator) -> QAPair:
    present = sorted({(o.shape, o.color) for o in scene.objects})
    absent = [(s, c) for s in SHAPES for c in COLORS if (s, c) not in present]
    # fair coin decides the answer first, which keeps yes/no balanced
    want_yes = rng.random() < 0.5
    pool = present if (want_yes and present) or not absent else absent
    shape, color = pool[rng.integers(len(pool))]
    query = {"shape": shape, "color": color}
    return QAPair(("is", "there", "a", color, shape), derive_existence(scene, query), "existence", query)


def derive_existence(scene: SceneSpec, query: dict) -> str:
    return "yes" if scene.count(query["shape"], query["color"]) else "no"


def _color_query(scene: SceneSpec, rng: np.random.Generator) -> QAPair | None:
    unique = [s for s in SHAPES if scene.count(s) == 1]
    if not unique:
        return None
    shape = unique[rng.integers(len(unique))]
    query = {"shape": shape}
    return QAPair(("what", "color", "is", "the", shape), derive_color(scene, query), "color-query", query)


def derive_color(scene: SceneSpec, query: dict) -> str:
    matches = [o for o in scene.objects if o.shape == query["shape"]]
    if len(matches) != 1:
        raise LabelError(f"color query needs exactly one {query['shape']}, scene has {len(matches)}")
    return matches[0].color


def _count(scene: SceneSpec, rng: np.random.Generator) -> QAPair:
    shape = SHAPES[rng.integers(len(SHAPES))]
    query = {"shape": shape}
    return QAPair(("how", "many", f"{shape}s", "are", "there"), str(scene.count(shape)), "count", query)


def _spatial(scene: SceneSpec, rng: np.random.Generator) -> QAPair | None:
    keys = Counter((o.shape, o.color) for o in scene.objects)
    unique = [o for o in scene.objects if keys[(o.shape, o.color)] == 1]
    if len(unique) < 2:
        return None
    first, second = rng.choice(len(unique), size=2, replace=False)
    a, b = unique[first], unique[second]
    relation = RELATIONS[rng.integers(len(RELATIONS))]
    query = {
        "a": {"shape": a.shape, "color": a.color},
        "b": {"shape": b.shape, "color": b.color},
        "relation": relation,
    }
    tokens = ("is", "the", a.color, a.shape, relation, *(("of",) if relation == "left" else ()), "the", b.color, b.shape)
    return QAPair(tokens, derive_spatial(scene, query), "spatial", query)


def derive_spatial(scene: SceneSpec, query: dict) -> str:
    def find(key: dict):
        matches = [o for o in scene.objects if o.shape == key["shape"] and o.color == key["color"]]
        if len(matches) != 1:
            raise LabelError(f"spatial query needs exactly one {key['color']} {key['shape']}")
        return matches[0]

    a, b = find(query["a"]), find(query["b"])
    axis = 0 if query["relation"] == "left" else 1
    return "yes" if a.center[axis] < b.center[axis] else "no"


GENERATORS = {
    "existence": _existence,
    "color-query": _color_query,
    "count": _count,
    "spatial": _spatial,
}


def gen_questions(scene: SceneSpec, count: int, seed: int, templates: Sequence[str] = QUESTION_TYPES) -> list[QAPair]:
    """
    Draw ``count`` questions about a scene.

    Each question picks a type uniformly from ``templates``; when a type is
    impossible for the scene (no uniquely identifiable object), an existence
    question is asked instead.

    Raises:
        LabelError: For an empty scene or an unknown template.
    """
    if not scene.objects:
        raise LabelError("cannot ask questions about an empty scene")
    unknown = set(templates) - set(GENERATORS)
    if unknown or not templates:
        raise LabelError(f"unknown question templates {sorted(unknown)}; choose from {list(QUESTION_TYPES)}")
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(count):
        qtype = templates[rng.integers(len(templates))]
        pair = GENERATORS[qtype](scene, rng)
        pairs.append(pair if pair is not None else _existence(scene, rng))
    return pairs


def derive_answer(scene: SceneSpec, pair: QAPair) -> str:
    """Recompute an answer from the scene and the pair's structured query."""
    if pair.qtype == "existence":
        return derive_existence(scene, pair.query)
    if pair.qtype == "color-query":
        return derive_color(scene, pair.query)
    if pair.qtype == "count":
        return str(scene.count(pair.query["shape"]))
    if pair.qtype == "spatial":
        return derive_spatial(scene, pair.query)
    raise LabelError(f"unknown question type {pair.qtype!r}")


def majority_answer(pairs: Sequence[QAPair]) -> str:
    """Most frequent answer (ties broken alphabetically)."""
    if not pairs:
        raise LabelError("no answers to take a majority over")
    counts = Counter(p.answer for p in pairs)
    return min(counts, key=lambda a: (-counts[a], a))


def majority_baseline(train: Sequence[QAPair], test: Sequence[QAPair]) -> float:
    """Accuracy on ``test`` of always answering the train split's majority answer."""
    if not test:
        return 0.0
    answer = majority_answer(train)
    return sum(p.answer == answer for p in test) / len(test)


def tokenize(text: str) -> list[str]:
    """Free-text question -> template tokens: lowercased, punctuation dropped."""
    return re.findall(r"[a-z0-9]+", text.lower())
