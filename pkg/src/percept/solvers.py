"""Deterministic solvers that consume only program text, never raw pixels.

Each solver reads the same evidence an LLM would see in the program
setting, so they double as reference answers ("what the representation
alone supports"). All tie-breaks are deterministic: alphabetical by label,
row-major for grid cells.
"""

from __future__ import annotations

from bisect import bisect_right

from .core import (
    Confidence,
    Direction,
    Interval,
    NormBox,
    NormCoord,
    PerceptionProgram,
    Point,
    Score,
)
from .errors import (
    EmptyInput,
    MissingGrid,
    MissingItems,
    MissingReadout,
    MissingRef,
    NoDetections,
    PointOutsideGrid,
    TieVote,
    WrongModality,
)

MULTIVIEW_CONVENTIONS = ("camera_opposes_flow", "camera_follows_flow")


def _require_modality(pp: PerceptionProgram, modality: str, who: str):
    if pp.modality != modality:
        raise WrongModality(f"{who} needs a {modality} program, got {pp.modality}")


def _dist2(a: NormCoord, b: NormCoord) -> int:
    return (a.x - b.x) ** 2 + (a.y - b.y) ** 2


def solve_relative_depth(points: PerceptionProgram, depth: PerceptionProgram) -> str:
    """Label of the nearest point, judged by its cell's interval midpoint.

    Each labeled point is placed in its grid cell by comparing normalized
    coordinates against the normalized cell boundaries. Midpoint ties fall
    back to the larger interval lower bound, then the alphabetical label.
    """
    _require_modality(points, "points", "solve_relative_depth")
    _require_modality(depth, "depth", "solve_relative_depth")
    if depth.grid is None:
        raise MissingGrid("depth program carries no grid")
    rows, cols = depth.grid
    dims = depth.images[0][1]
    # normalized cell boundaries; coverage is [0, 1000), half-open per cell
    col_edges = [1000 * (j * dims.width // cols) // dims.width for j in range(cols + 1)]
    row_edges = [1000 * (i * dims.height // rows) // dims.height for i in range(rows + 1)]

    by_id = {it.p: it for it in depth.items}
    scored = []
    for it in points.items:
        x, y = it.c.x, it.c.y
        if x >= col_edges[-1] or y >= row_edges[-1]:
            raise PointOutsideGrid(f"point {it.p!r} at ({x},{y}) outside grid coverage")
        col = bisect_right(col_edges, x) - 1
        row = bisect_right(row_edges, y) - 1
        cell = by_id.get(f"cell_{row * cols + col}")
        if cell is None:
            raise MissingItems(f"depth program lacks cell_{row * cols + col}")
        if not isinstance(cell.r, Interval):
            raise MissingReadout(f"cell {cell.p!r} has no depth interval")
        scored.append((-cell.r.midpoint, -cell.r.lo, it.p))
    if not scored:
        raise EmptyInput("points program has no items")
    return min(scored)[2]


def solve_multiview(flow: PerceptionProgram, convention: str = "camera_opposes_flow") -> str:
    """'left' or 'right' camera motion from the majority cell direction."""
    _require_modality(flow, "flow", "solve_multiview")
    if convention not in MULTIVIEW_CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    votes = {"left": 0, "right": 0}
    for it in flow.items:
        if not isinstance(it.r, Direction):
            raise MissingReadout(f"cell {it.p!r} has no direction")
        if it.r.label not in votes:
            raise WrongModality(f"multi-view needs horizontal flow, got {it.r.label!r}")
        votes[it.r.label] += 1
    if votes["left"] == votes["right"]:
        raise TieVote(f"exact tie at {votes['left']} votes each")
    majority = "left" if votes["left"] > votes["right"] else "right"
    if convention == "camera_follows_flow":
        return majority
    return "right" if majority == "left" else "left"


def naive_correspondence(points: PerceptionProgram) -> str:
    """Alternative closest to REF in normalized coordinates (no vision)."""
    _require_modality(points, "points", "naive_correspondence")
    ref = next((it for it in points.items if it.p == "REF"), None)
    if ref is None:
        raise MissingRef("no item with id REF")
    alternatives = [it for it in points.items if it.p != "REF"]
    if not alternatives:
        raise EmptyInput("no alternatives besides REF")
    return min((_dist2(it.c, ref.c), it.p) for it in alternatives)[1]


def oracle_correspondence(matches: PerceptionProgram, ref: NormCoord,
                          alternatives: PerceptionProgram) -> str:
    """Follow the correspondences: nearest match to REF, map through its
    readout, then pick the alternative nearest the mapped point."""
    _require_modality(matches, "visual_correspondence", "oracle_correspondence")
    _require_modality(alternatives, "points", "oracle_correspondence")
    if not matches.items:
        raise EmptyInput("match program has no items")
    for it in matches.items:
        if not isinstance(it.r, Point):
            raise MissingReadout(f"match {it.p!r} has no target point")
    nearest = min((_dist2(it.c, ref), it.p, it) for it in matches.items)[2]
    mapped = nearest.r.at
    cands = [it for it in alternatives.items if it.p != "REF"]
    if not cands:
        raise EmptyInput("no alternatives to choose from")
    return min((_dist2(it.c, mapped), it.p) for it in cands)[1]


def solve_jigsaw(pp: PerceptionProgram) -> str:
    """Candidate with the larger mean edge score; A wins exact ties."""
    _require_modality(pp, "jigsaw", "solve_jigsaw")
    by_id = {it.p: it for it in pp.items}
    means = {}
    for label in ("A", "B"):
        edges = []
        for prim in (f"left_{label}", f"top_{label}"):
            it = by_id.get(prim)
            if it is None:
                raise MissingItems(f"jigsaw program lacks {prim}")
            if not isinstance(it.r, Score):
                raise MissingReadout(f"{prim} has no score")
            edges.append(it.r.value)
        means[label] = sum(edges) / len(edges)
    return "A" if means["A"] >= means["B"] else "B"


def solve_semantic(pp: PerceptionProgram) -> str:
    """Label of the highest similarity score; ties alphabetical."""
    _require_modality(pp, "semantic_correspondence", "solve_semantic")
    if not pp.items:
        raise EmptyInput("semantic program has no items")
    for it in pp.items:
        if not isinstance(it.r, Score):
            raise MissingReadout(f"candidate {it.p!r} has no score")
    return min((-it.r.value, it.p) for it in pp.items)[1]


def box_iou(a: NormBox, b: NormBox) -> float:
    """Intersection-over-union of two normalized boxes (real rectangles)."""
    ix = max(0, min(a.x1, b.x1) - max(a.x0, b.x0))
    iy = max(0, min(a.y1, b.y1) - max(a.y0, b.y0))
    inter = ix * iy
    union = ((a.x1 - a.x0) * (a.y1 - a.y0)
             + (b.x1 - b.x0) * (b.y1 - b.y0) - inter)
    return inter / union if union > 0 else 0.0


def solve_localization(dets: PerceptionProgram,
                       candidates: list[tuple[str, NormBox]],
                       target_label: str) -> str:
    """Candidate box best overlapping the strongest matching detection.

    Detections whose label matches ``target_label`` (case-insensitive) are
    preferred; if none match, all detections compete. The highest
    confidence detection is the anchor; IoU ties go alphabetical.
    """
    _require_modality(dets, "detection", "solve_localization")
    if not candidates:
        raise EmptyInput("no candidate boxes")
    if not dets.items:
        raise NoDetections("detection program has no items")
    for it in dets.items:
        if not isinstance(it.r, Confidence):
            raise MissingReadout(f"detection {it.p!r} has no confidence")
    want = target_label.lower()
    pool = [it for it in dets.items if (it.b or "").lower() == want] or list(dets.items)
    anchor = max(pool, key=lambda it: it.r.value)
    return min((-box_iou(box, anchor.c), label) for label, box in candidates)[1]
