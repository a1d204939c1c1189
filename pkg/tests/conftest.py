"""Shared generators for property and fuzz tests (seeded, deterministic)."""

from __future__ import annotations

import random
import string

import numpy as np
import pytest

from percept.core import (
    Confidence,
    Direction,
    ImageDims,
    Interval,
    Item,
    NormBox,
    NormCoord,
    PerceptionProgram,
    Point,
    Relation,
    Score,
)

TOKEN_CHARS = string.ascii_letters + string.digits + "_-"
NASTY_LABELS = [
    "traffic light",
    "a,b",
    "{brace}",
    "[bracket]",
    'quote"inside',
    "colon: here",
    "  padded  ",
    "emoji ☃",
    "",
]


def random_token(rng: random.Random, prefix: str = "") -> str:
    body = "".join(rng.choice(TOKEN_CHARS) for _ in range(rng.randint(1, 8)))
    return prefix + body


def random_readout(rng: random.Random, modality: str):
    if modality == "depth":
        lo = round(rng.random(), 6)
        hi = round(lo + (1.0 - lo) * rng.random(), 6)
        return Interval(lo, hi)
    if modality == "flow":
        return Direction(rng.choice(["left", "right", "up", "down"]))
    if modality == "visual_correspondence":
        return Point(NormCoord(rng.randint(0, 1000), rng.randint(0, 1000)))
    if modality == "detection":
        return Confidence(round(rng.random(), 6))
    if modality == "points":
        return None
    return Score(round(rng.random(), 6))


def random_program(rng: random.Random) -> PerceptionProgram:
    modality = rng.choice([
        "depth", "flow", "visual_correspondence", "jigsaw",
        "detection", "semantic_correspondence", "points",
    ])
    images = tuple(
        (f"img{i}", ImageDims(rng.randint(1, 4096), rng.randint(1, 4096)))
        for i in range(rng.randint(1, 3))
    )
    n_items = rng.randint(0, 8) if modality == "detection" else rng.randint(1, 8)
    redacted = modality != "points" and rng.random() < 0.2

    ids: list[str] = []
    while len(ids) < n_items:
        candidate = random_token(rng)
        if candidate not in ids:
            ids.append(candidate)

    items = []
    for item_id in ids:
        if rng.random() < 0.5:
            c = NormCoord(rng.randint(0, 1000), rng.randint(0, 1000))
        else:
            x0, x1 = sorted(rng.randint(0, 1000) for _ in range(2))
            y0, y1 = sorted(rng.randint(0, 1000) for _ in range(2))
            c = NormBox(x0, y0, x1, y1)
        r = None if redacted else random_readout(rng, modality)
        b = None
        if rng.random() < 0.3:
            b = rng.choice(NASTY_LABELS) if rng.random() < 0.5 else random_token(rng)
        items.append(Item(p=item_id, c=c, r=r, b=b))

    relations = ()
    if not redacted and len(ids) >= 2 and rng.random() < 0.5:
        rels = []
        for _ in range(rng.randint(1, 4)):
            a, b_ = rng.sample(ids, 2)
            rels.append(Relation(a, rng.choice(["in-front-of", "adjacent-to"]), b_))
        relations = tuple(rels)

    grid = None
    if modality in ("depth", "flow"):
        grid = (rng.randint(1, 16), rng.randint(1, 16))
    return PerceptionProgram(
        modality=modality, images=images, grid=grid,
        items=tuple(items), relations=relations,
    )


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20260810)


@pytest.fixture
def nprng() -> np.random.Generator:
    return np.random.default_rng(20260810)
