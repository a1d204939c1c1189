"""Core schema for perception programs.

A program is a compact symbolic summary of one visual modality: a list of
items (primitive id, normalized location, readout, optional label) plus an
optional set of relation triples. Locations live on a canonical [0, 1000]
integer lattice so programs are comparable across image sizes.
"""

from __future__ import annotations

import math
import operator
from bisect import bisect_right
from dataclasses import dataclass, field, replace

from .errors import (
    GridTooFine,
    IndexOutOfRange,
    InvalidGrid,
    OutOfBounds,
)

MODALITIES = (
    "depth",
    "flow",
    "visual_correspondence",
    "jigsaw",
    "detection",
    "semantic_correspondence",
    "points",
)

DIRECTION_LABELS = ("left", "right", "up", "down")


def _as_int(value, what: str) -> int:
    try:
        return operator.index(value)
    except TypeError:
        raise TypeError(f"{what} must be an integer, got {value!r}") from None


@dataclass(frozen=True)
class ImageDims:
    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"image dims must be positive, got {self.width}x{self.height}")


@dataclass(frozen=True)
class NormCoord:
    """Point on the canonical [0, 1000] lattice."""

    x: int
    y: int

    def __post_init__(self):
        for v in (self.x, self.y):
            if not 0 <= v <= 1000:
                raise ValueError(f"normalized coordinate {v} outside [0, 1000]")


@dataclass(frozen=True)
class NormBox:
    """Axis-aligned box on the canonical lattice, corners inclusive."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        for v in (self.x0, self.y0, self.x1, self.y1):
            if not 0 <= v <= 1000:
                raise ValueError(f"normalized box coordinate {v} outside [0, 1000]")
        if self.x0 > self.x1 or self.y0 > self.y1:
            raise ValueError(f"inverted box ({self.x0},{self.y0},{self.x1},{self.y1})")


def _check_unit(value: float, what: str) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{what} must be finite, got {value!r}")
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{what} must lie in [0, 1], got {value!r}")
    return value


@dataclass(frozen=True)
class Interval:
    """Min/max values observed over a primitive's support."""

    lo: float
    hi: float

    def __post_init__(self):
        object.__setattr__(self, "lo", _check_unit(self.lo, "interval lo"))
        object.__setattr__(self, "hi", _check_unit(self.hi, "interval hi"))
        if self.lo > self.hi:
            raise ValueError(f"interval lo {self.lo} > hi {self.hi}")

    @property
    def midpoint(self) -> float:
        return (self.lo + self.hi) / 2.0


@dataclass(frozen=True)
class Direction:
    label: str

    def __post_init__(self):
        if self.label not in DIRECTION_LABELS:
            raise ValueError(f"unknown direction {self.label!r}")


@dataclass(frozen=True)
class Point:
    """Matched location in a second image."""

    at: NormCoord


@dataclass(frozen=True)
class Score:
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", _check_unit(self.value, "score"))


@dataclass(frozen=True)
class Confidence:
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", _check_unit(self.value, "confidence"))


ReadOut = Interval | Direction | Point | Score | Confidence

READOUT_BY_MODALITY = {
    "depth": Interval,
    "flow": Direction,
    "visual_correspondence": Point,
    "jigsaw": Score,
    "detection": Confidence,
    "semantic_correspondence": Score,
    "points": type(None),
}


@dataclass(frozen=True)
class Item:
    """One primitive's record: id, location, readout, optional label."""

    p: str
    c: NormCoord | NormBox
    r: ReadOut | None = None
    b: str | None = None


@dataclass(frozen=True)
class Relation:
    subject: str
    predicate: str
    obj: str


@dataclass(frozen=True)
class PerceptionProgram:
    modality: str
    images: tuple[tuple[str, ImageDims], ...]
    items: tuple[Item, ...]
    grid: tuple[int, int] | None = None
    relations: tuple[Relation, ...] = ()

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise ValueError(f"unknown modality {self.modality!r}")
        object.__setattr__(self, "images", tuple(self.images))
        object.__setattr__(self, "items", tuple(self.items))
        object.__setattr__(self, "relations", tuple(self.relations))

    def item(self, p: str) -> Item:
        for it in self.items:
            if it.p == p:
                return it
        raise KeyError(p)

    def item_ids(self) -> list[str]:
        return [it.p for it in self.items]


# ---------------------------------------------------------------------------
# coordinate normalization


def normalize_coord(x, y, dims: ImageDims) -> NormCoord:
    """Map an in-bounds pixel to the [0, 1000] lattice via floor scaling."""
    x = _as_int(x, "x")
    y = _as_int(y, "y")
    if not (0 <= x < dims.width and 0 <= y < dims.height):
        raise OutOfBounds(f"pixel ({x},{y}) outside {dims.width}x{dims.height}")
    return NormCoord(1000 * x // dims.width, 1000 * y // dims.height)


def normalize_box(x0, y0, x1, y1, dims: ImageDims) -> NormBox:
    """Normalize a pixel box; corners are clamped into the image first.

    Detectors disagree on whether x1/y1 are inclusive or exclusive, so a
    corner equal to W or H (or any out-of-range value) is clamped rather
    than rejected. Only an inverted box is an error.
    """
    x0, y0 = _as_int(x0, "x0"), _as_int(y0, "y0")
    x1, y1 = _as_int(x1, "x1"), _as_int(y1, "y1")
    if x0 > x1 or y0 > y1:
        raise OutOfBounds(f"inverted box ({x0},{y0},{x1},{y1})")
    x0 = min(max(x0, 0), dims.width - 1)
    x1 = min(max(x1, 0), dims.width - 1)
    y0 = min(max(y0, 0), dims.height - 1)
    y1 = min(max(y1, 0), dims.height - 1)
    a = normalize_coord(x0, y0, dims)
    b = normalize_coord(x1, y1, dims)
    return NormBox(a.x, a.y, b.x, b.y)


# ---------------------------------------------------------------------------
# grid partitioning


@dataclass(frozen=True)
class GridSpec:
    """Regular P x P partition of the pixel domain, cells in row-major order.

    Each cell is a half-open pixel rectangle (x0, y0, x1, y1). Boundaries
    use floor(i*extent/P), so uneven extents spread the remainder over the
    later cells and the union is always exact.
    """

    rows: int
    cols: int
    dims: ImageDims
    cells: tuple[tuple[int, int, int, int], ...] = field(repr=False)

    @property
    def cell_count(self) -> int:
        return self.rows * self.cols

    def col_edges(self) -> list[int]:
        return [j * self.dims.width // self.cols for j in range(self.cols + 1)]

    def row_edges(self) -> list[int]:
        return [i * self.dims.height // self.rows for i in range(self.rows + 1)]


def make_grid(dims: ImageDims, p) -> GridSpec:
    """Partition the image into a regular p x p grid."""
    p = _as_int(p, "grid order")
    if p < 1:
        raise InvalidGrid(f"grid order must be >= 1, got {p}")
    if p > min(dims.width, dims.height):
        raise GridTooFine(f"grid order {p} exceeds min dimension of {dims.width}x{dims.height}")
    xs = [j * dims.width // p for j in range(p + 1)]
    ys = [i * dims.height // p for i in range(p + 1)]
    cells = tuple(
        (xs[j], ys[i], xs[j + 1], ys[i + 1])
        for i in range(p)
        for j in range(p)
    )
    return GridSpec(rows=p, cols=p, dims=dims, cells=cells)


def cell_center(grid: GridSpec, k) -> NormCoord:
    """Normalized center of cell k (integer center pixel, then floor-scale)."""
    k = _as_int(k, "cell index")
    if not 0 <= k < grid.cell_count:
        raise IndexOutOfRange(f"cell index {k} outside [0, {grid.cell_count})")
    x0, y0, x1, y1 = grid.cells[k]
    cx = (x0 + x1 - 1) // 2
    cy = (y0 + y1 - 1) // 2
    return normalize_coord(cx, cy, grid.dims)


def cell_of_point(grid: GridSpec, x, y) -> int:
    """Index of the unique cell containing pixel (x, y)."""
    x = _as_int(x, "x")
    y = _as_int(y, "y")
    if not (0 <= x < grid.dims.width and 0 <= y < grid.dims.height):
        raise OutOfBounds(f"pixel ({x},{y}) outside {grid.dims.width}x{grid.dims.height}")
    col = bisect_right(grid.col_edges(), x) - 1
    row = bisect_right(grid.row_edges(), y) - 1
    return row * grid.cols + col


def grid_neighbor_pairs(rows: int, cols: int) -> list[tuple[int, int]]:
    """Unordered 4-neighbor cell index pairs (a < b) of a rows x cols grid."""
    pairs = []
    for i in range(rows):
        for j in range(cols):
            k = i * cols + j
            if j + 1 < cols:
                pairs.append((k, k + 1))
            if i + 1 < rows:
                pairs.append((k, k + cols))
    return pairs


# ---------------------------------------------------------------------------
# program-level checks


def validate_program(pp: PerceptionProgram) -> list[str]:
    """Check program invariants; returns the list of violations (empty = pass)."""
    violations = []
    if not pp.images:
        violations.append("no images declared")
    if not pp.items and pp.modality != "detection":
        violations.append(f"{pp.modality} program has no items")

    ids = [it.p for it in pp.items]
    seen = set()
    for p in ids:
        if p in seen:
            violations.append(f"duplicate item id {p!r}")
        seen.add(p)

    expected = READOUT_BY_MODALITY[pp.modality]
    with_readout = [it for it in pp.items if it.r is not None]
    if pp.modality == "points":
        for it in with_readout:
            violations.append(f"points item {it.p!r} carries a readout")
    else:
        for it in with_readout:
            if not isinstance(it.r, expected):
                violations.append(
                    f"readout/modality mismatch: {it.p!r} has "
                    f"{type(it.r).__name__}, {pp.modality} needs {expected.__name__}"
                )
        # readouts are all present (complete program) or all absent (redacted)
        if with_readout and len(with_readout) != len(pp.items):
            violations.append("partially redacted program: some items lack readouts")

    if pp.grid is not None:
        rows, cols = pp.grid
        if rows < 1 or cols < 1:
            violations.append(f"grid {rows}x{cols} is not positive")

    for rel in pp.relations:
        if rel.subject == rel.obj:
            violations.append(f"self relation on {rel.subject!r}")
        if rel.subject not in seen or rel.obj not in seen:
            violations.append(
                f"dangling relation ({rel.subject!r}, {rel.predicate!r}, {rel.obj!r})"
            )
    return violations


def redact_readouts(pp: PerceptionProgram) -> PerceptionProgram:
    """Strip every readout and all relations; idempotent.

    The result is the incomplete program handed to a model in the
    reconstruction experiments.
    """
    items = tuple(replace(it, r=None) for it in pp.items)
    return replace(pp, items=items, relations=())
