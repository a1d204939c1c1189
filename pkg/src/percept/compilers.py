"""Compilers from raw tool outputs to perception programs.

One compiler per modality. Grid modalities (depth, flow) summarize cell
statistics over a regular P x P partition; the others map discrete tool
outputs (matches, detections, candidate scores, edge strips, labeled
points) to one item each. Every compiler returns a program that passes
``validate_program``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import image_metrics
from .core import (
    Confidence,
    Direction,
    ImageDims,
    Interval,
    Item,
    NormCoord,
    PerceptionProgram,
    Point,
    Relation,
    Score,
    cell_center,
    grid_neighbor_pairs,
    make_grid,
    normalize_box,
    normalize_coord,
)
from .errors import (
    DimsMismatch,
    DuplicateLabel,
    EmptyInput,
    NonFiniteValue,
    OutOfRangeDepth,
    StripTooWide,
)

DEFAULT_GRID = 8
DEFAULT_TAU = 0.05
IN_FRONT_OF = "in-front-of"


# ---------------------------------------------------------------------------
# raw tool-output containers (validated by the compilers, not on construction)


@dataclass
class DepthField:
    """Scalar field in [0, 1], larger = nearer, shape (H, W)."""

    dims: ImageDims
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.dims.height, self.dims.width):
            raise ValueError(
                f"depth values shape {self.values.shape} != "
                f"({self.dims.height}, {self.dims.width})"
            )


@dataclass
class FlowField:
    """Per-pixel motion components (pixels/frame), each shape (H, W)."""

    dims: ImageDims
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=np.float64)
        self.v = np.asarray(self.v, dtype=np.float64)
        expect = (self.dims.height, self.dims.width)
        if self.u.shape != expect or self.v.shape != expect:
            raise ValueError(f"flow shapes {self.u.shape}/{self.v.shape} != {expect}")


@dataclass
class MatchSet:
    """Point correspondences between a reference and a target image."""

    dims_ref: ImageDims
    dims_tgt: ImageDims
    matches: list[tuple[tuple[int, int], tuple[int, int]]]


@dataclass
class Detection:
    label: str
    score: float
    box: tuple[int, int, int, int]  # x0, y0, x1, y1 pixels


@dataclass
class DetectionSet:
    dims: ImageDims
    detections: list[Detection] = field(default_factory=list)


@dataclass
class ScoredCandidate:
    label: str
    point: tuple[int, int]
    score: float


@dataclass
class CandidateScoreSet:
    dims_tgt: ImageDims
    candidates: list[ScoredCandidate]


@dataclass
class JigsawInstance:
    """Source raster plus two candidate completions of a cut-out region.

    ``region`` is the half-open pixel rectangle (x0, y0, x1, y1) of the
    missing piece (lower-right corner of the source in the benchmark).
    The source raster still carries content inside the region; candidates
    are compared against it.
    """

    source: np.ndarray  # (H, W, 3) in [0, 1]
    region: tuple[int, int, int, int]
    candidate_a: np.ndarray
    candidate_b: np.ndarray
    strip_width: int | None = None  # default: max(4, 10% of edge length)


@dataclass
class LabeledPoints:
    dims: ImageDims
    points: list[tuple[str, tuple[int, int]]]


def _require_finite(arr: np.ndarray, what: str):
    if not np.isfinite(arr).all():
        raise NonFiniteValue(f"{what} contains NaN or infinity")


# ---------------------------------------------------------------------------
# grid modalities


def compile_depth(field: DepthField, p: int = DEFAULT_GRID, tau: float = DEFAULT_TAU) -> PerceptionProgram:
    """Summarize a depth field as per-cell [min, max] intervals plus
    in-front-of relations between 4-neighbor cells whose mean depths
    differ by more than ``tau``."""
    _require_finite(field.values, "depth field")
    if field.values.min() < 0.0 or field.values.max() > 1.0:
        raise OutOfRangeDepth("depth values must lie in [0, 1]")
    if tau < 0.0:
        raise ValueError(f"tau must be >= 0, got {tau}")

    grid = make_grid(field.dims, p)
    items = []
    means = []
    for k, (x0, y0, x1, y1) in enumerate(grid.cells):
        cell = field.values[y0:y1, x0:x1]
        items.append(
            Item(
                p=f"cell_{k}",
                c=cell_center(grid, k),
                r=Interval(float(cell.min()), float(cell.max())),
            )
        )
        means.append(float(cell.mean()))

    relations = []
    for a, b in grid_neighbor_pairs(grid.rows, grid.cols):
        if means[a] > means[b] + tau:
            relations.append(Relation(f"cell_{a}", IN_FRONT_OF, f"cell_{b}"))
        elif means[b] > means[a] + tau:
            relations.append(Relation(f"cell_{b}", IN_FRONT_OF, f"cell_{a}"))
    relations.sort(key=lambda r: (r.subject, r.obj))

    return PerceptionProgram(
        modality="depth",
        images=(("img0", field.dims),),
        grid=(grid.rows, grid.cols),
        items=tuple(items),
        relations=tuple(relations),
    )


def compile_flow(field: FlowField, p: int = DEFAULT_GRID, axis: str = "horizontal") -> PerceptionProgram:
    """Summarize a flow field as a per-cell dominant direction.

    The readout is the sign of the cell-mean component: negative means
    left (horizontal) or up (vertical), zero counts as positive.
    """
    if axis == "horizontal":
        comp, neg, pos = field.u, "left", "right"
    elif axis == "vertical":
        comp, neg, pos = field.v, "up", "down"
    else:
        raise ValueError(f"axis must be horizontal or vertical, got {axis!r}")
    _require_finite(comp, "flow field")

    grid = make_grid(field.dims, p)
    items = []
    for k, (x0, y0, x1, y1) in enumerate(grid.cells):
        mean = float(comp[y0:y1, x0:x1].mean())
        items.append(
            Item(
                p=f"cell_{k}",
                c=cell_center(grid, k),
                r=Direction(neg if mean < 0.0 else pos),
            )
        )
    return PerceptionProgram(
        modality="flow",
        images=(("img0", field.dims),),
        grid=(grid.rows, grid.cols),
        items=tuple(items),
    )


# ---------------------------------------------------------------------------
# discrete modalities


def compile_visual_correspondence(ms: MatchSet) -> PerceptionProgram:
    """One item per match: location is the reference point, readout the
    matched target point, both on the canonical lattice."""
    if not ms.matches:
        raise EmptyInput("match set is empty")
    items = []
    for i, ((x1, y1), (x2, y2)) in enumerate(ms.matches):
        items.append(
            Item(
                p=f"m{i}",
                c=normalize_coord(x1, y1, ms.dims_ref),
                r=Point(normalize_coord(x2, y2, ms.dims_tgt)),
            )
        )
    return PerceptionProgram(
        modality="visual_correspondence",
        images=(("img0", ms.dims_ref), ("img1", ms.dims_tgt)),
        items=tuple(items),
    )


def default_strip_width(region_w: int, region_h: int) -> int:
    return max(4, min(region_w, region_h) // 10)


def compile_jigsaw(ji: JigsawInstance) -> PerceptionProgram:
    """Score each candidate's left and top edge strip against the source
    content at the position the strip would occupy inside the missing
    region. A candidate cut verbatim from the source scores exactly 1."""
    src = np.asarray(ji.source, dtype=np.float64)
    if src.ndim != 3 or src.shape[-1] != 3:
        raise DimsMismatch(f"source must be (H, W, 3), got {src.shape}")
    sh, sw_total = src.shape[:2]
    x0, y0, x1, y1 = ji.region
    if not (0 <= x0 < x1 <= sw_total and 0 <= y0 < y1 <= sh):
        raise DimsMismatch(f"region {ji.region} outside source {sw_total}x{sh}")
    region_w, region_h = x1 - x0, y1 - y0

    cands = []
    for label, raster in (("A", ji.candidate_a), ("B", ji.candidate_b)):
        arr = np.asarray(raster, dtype=np.float64)
        if arr.shape != (region_h, region_w, 3):
            raise DimsMismatch(
                f"candidate {label} shape {arr.shape} != region ({region_h}, {region_w}, 3)"
            )
        cands.append((label, arr))

    sw = ji.strip_width if ji.strip_width is not None else default_strip_width(region_w, region_h)
    if not 1 <= sw <= min(region_w, region_h):
        raise StripTooWide(f"strip width {sw} outside [1, {min(region_w, region_h)}]")

    cand_dims = ImageDims(region_w, region_h)
    c_left = normalize_box(0, 0, sw - 1, region_h - 1, cand_dims)
    c_top = normalize_box(0, 0, region_w - 1, sw - 1, cand_dims)
    src_left = src[y0:y1, x0:x0 + sw]
    src_top = src[y0:y0 + sw, x0:x1]

    items = []
    for label, arr in cands:
        score_left = image_metrics.composite_similarity(src_left, arr[:, :sw])
        score_top = image_metrics.composite_similarity(src_top, arr[:sw, :])
        items.append(Item(p=f"left_{label}", c=c_left, r=Score(score_left)))
        items.append(Item(p=f"top_{label}", c=c_top, r=Score(score_top)))

    return PerceptionProgram(
        modality="jigsaw",
        images=(("img0", ImageDims(sw_total, sh)), ("img1", cand_dims), ("img2", cand_dims)),
        items=tuple(items),
    )


def compile_detections(ds: DetectionSet) -> PerceptionProgram:
    """One item per detection in input order; empty sets are legal."""
    items = []
    for i, det in enumerate(ds.detections):
        items.append(
            Item(
                p=f"det_{i}",
                c=normalize_box(*det.box, ds.dims),
                r=Confidence(float(det.score)),
                b=det.label,
            )
        )
    return PerceptionProgram(
        modality="detection",
        images=(("img0", ds.dims),),
        items=tuple(items),
    )


def compile_semantic_correspondence(cs: CandidateScoreSet) -> PerceptionProgram:
    """One item per candidate point with its expert similarity score.

    Raw scores already inside [0, 1] pass through unchanged; otherwise
    they are min-max mapped over the candidate set (a monotone mapping,
    so the argmax candidate is preserved). A degenerate spread maps to 1.
    """
    if not cs.candidates:
        raise EmptyInput("candidate set is empty")
    labels = [c.label for c in cs.candidates]
    if len(set(labels)) != len(labels):
        raise DuplicateLabel(f"duplicate candidate labels in {labels}")
    raw = np.array([float(c.score) for c in cs.candidates])
    _require_finite(raw, "candidate scores")

    if raw.min() >= 0.0 and raw.max() <= 1.0:
        mapped = raw
    else:
        span = raw.max() - raw.min()
        mapped = np.ones_like(raw) if span == 0.0 else (raw - raw.min()) / span

    items = []
    for cand, score in zip(cs.candidates, mapped):
        items.append(
            Item(
                p=cand.label,
                c=normalize_coord(cand.point[0], cand.point[1], cs.dims_tgt),
                r=Score(float(score)),
            )
        )
    return PerceptionProgram(
        modality="semantic_correspondence",
        images=(("img0", cs.dims_tgt),),
        items=tuple(items),
    )


def compile_points(lp: LabeledPoints) -> PerceptionProgram:
    """Coordinates-only program for the answer-option points of a task."""
    labels = [label for label, _ in lp.points]
    if len(set(labels)) != len(labels):
        raise DuplicateLabel(f"duplicate point labels in {labels}")
    if not lp.points:
        raise EmptyInput("no labeled points")
    items = tuple(
        Item(p=label, c=normalize_coord(x, y, lp.dims))
        for label, (x, y) in lp.points
    )
    return PerceptionProgram(
        modality="points",
        images=(("img0", lp.dims),),
        items=items,
    )
