"""Rank, displacement, and accuracy metrics for program-level analysis."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

from .compilers import MatchSet
from .core import Interval, PerceptionProgram, Point, normalize_coord
from .errors import (
    EmptyInput,
    IdSetMismatch,
    LengthMismatch,
    MissingKey,
    MissingReadout,
    TooFewItems,
    WrongModality,
)

# diagonal of the [0, 1000]^2 normalized coordinate space
NORM_DIAGONAL = math.sqrt(2.0) * 1000.0

Ranking = list[str]


def kendall_tau(a: Ranking, b: Ranking) -> float:
    """Tie-adjusted (tau-b) rank correlation between two orderings.

    Both arguments list the same ids, most-prominent first. With strict
    orderings (no ties are representable in a ranking) this reduces to
    (concordant - discordant) / C(n, 2).
    """
    if len(set(a)) != len(a) or len(set(b)) != len(b):
        raise IdSetMismatch("rankings must not repeat ids")
    if set(a) != set(b):
        raise IdSetMismatch(f"rankings cover different ids: {sorted(set(a) ^ set(b))}")
    n = len(a)
    if n < 2:
        raise TooFewItems(f"need at least 2 ids, got {n}")

    pos_a = {p: i for i, p in enumerate(a)}
    pos_b = {p: i for i, p in enumerate(b)}
    concordant = discordant = ties_a = ties_b = 0
    for p, q in combinations(a, 2):
        da = pos_a[p] - pos_a[q]
        db = pos_b[p] - pos_b[q]
        if da == 0:
            ties_a += 1
        if db == 0:
            ties_b += 1
        if da == 0 or db == 0:
            continue
        if (da > 0) == (db > 0):
            concordant += 1
        else:
            discordant += 1
    n0 = n * (n - 1) // 2
    denom = math.sqrt((n0 - ties_a) * (n0 - ties_b))
    return (concordant - discordant) / denom


def ranking_from_depth(pp: PerceptionProgram) -> Ranking:
    """Cell ids sorted nearest-first by interval midpoint.

    Exact midpoint ties keep the program's row-major order (stable sort).
    """
    if pp.modality != "depth":
        raise WrongModality(f"need a depth program, got {pp.modality}")
    for it in pp.items:
        if not isinstance(it.r, Interval):
            raise MissingReadout(f"cell {it.p!r} has no depth interval")
    return [it.p for it in sorted(pp.items, key=lambda it: -it.r.midpoint)]


@dataclass(frozen=True)
class MatchErrorRow:
    match_id: str
    displacement_pct: float  # true ref->target shift, % of normalized diagonal
    error_pct: float         # prediction->truth distance, % of diagonal
    copied_input: bool       # prediction strictly closer to its own c than to truth


@dataclass(frozen=True)
class DisplacementSummary:
    count: int
    mean_error_pct: float
    median_error_pct: float
    copied_input_fraction: float


def displacement_error_stats(truth: MatchSet, predicted: PerceptionProgram,
                             ) -> tuple[list[MatchErrorRow], DisplacementSummary]:
    """Per-match displacement and reconstruction error, % of image diagonal.

    Predicted items pair with truth matches in order. ``copied_input``
    flags the failure mode where a prediction just echoes the reference
    coordinate instead of following the correspondence.
    """
    if predicted.modality != "visual_correspondence":
        raise WrongModality(f"need a visual_correspondence program, got {predicted.modality}")
    if len(predicted.items) != len(truth.matches):
        raise LengthMismatch(
            f"{len(predicted.items)} predictions vs {len(truth.matches)} truth matches"
        )
    if not truth.matches:
        raise EmptyInput("no matches to score")

    rows = []
    for it, ((x1, y1), (x2, y2)) in zip(predicted.items, truth.matches):
        if not isinstance(it.r, Point):
            raise MissingReadout(f"match {it.p!r} has no predicted point")
        ref = normalize_coord(x1, y1, truth.dims_ref)
        tgt = normalize_coord(x2, y2, truth.dims_tgt)
        pred = it.r.at
        displacement = math.hypot(tgt.x - ref.x, tgt.y - ref.y)
        error = math.hypot(pred.x - tgt.x, pred.y - tgt.y)
        to_input = math.hypot(pred.x - it.c.x, pred.y - it.c.y)
        rows.append(MatchErrorRow(
            match_id=it.p,
            displacement_pct=100.0 * displacement / NORM_DIAGONAL,
            error_pct=100.0 * error / NORM_DIAGONAL,
            copied_input=to_input < error,
        ))

    errors = sorted(r.error_pct for r in rows)
    n = len(errors)
    median = errors[n // 2] if n % 2 else (errors[n // 2 - 1] + errors[n // 2]) / 2.0
    summary = DisplacementSummary(
        count=n,
        mean_error_pct=sum(errors) / n,
        median_error_pct=median,
        copied_input_fraction=sum(r.copied_input for r in rows) / n,
    )
    return rows, summary


def accuracy(predictions: list[tuple[str, str]], keys: list[tuple[str, str]]) -> float:
    """Percent of predictions matching their answer key, 2-decimal rounded."""
    if not predictions:
        raise EmptyInput("no predictions")
    key_by_id = dict(keys)
    correct = 0
    for pid, label in predictions:
        if pid not in key_by_id:
            raise MissingKey(f"no answer key for {pid!r}")
        correct += label == key_by_id[pid]
    return round(100.0 * correct / len(predictions), 2)
