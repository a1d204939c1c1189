"""Coordinate normalization, grid partitioning, validation, redaction."""

import random
from fractions import Fraction

import numpy as np
import pytest

from percept.core import (
    ImageDims,
    Interval,
    Item,
    NormBox,
    NormCoord,
    PerceptionProgram,
    Relation,
    cell_center,
    cell_of_point,
    grid_neighbor_pairs,
    make_grid,
    normalize_box,
    normalize_coord,
    redact_readouts,
    validate_program,
)
from percept.errors import GridTooFine, IndexOutOfRange, InvalidGrid, OutOfBounds

from conftest import random_program


class TestNormalizeCoord:
    def test_zero(self):
        assert normalize_coord(0, 0, ImageDims(640, 480)) == NormCoord(0, 0)

    def test_midpoint(self):
        assert normalize_coord(400, 240, ImageDims(800, 480)) == NormCoord(500, 500)

    def test_last_pixel(self):
        # floor(1000*799/800), floor(1000*479/480)
        assert normalize_coord(799, 479, ImageDims(800, 480)) == NormCoord(998, 997)

    @pytest.mark.parametrize("x,y", [(-1, 0), (0, -1), (800, 0), (0, 480)])
    def test_out_of_bounds(self, x, y):
        with pytest.raises(OutOfBounds):
            normalize_coord(x, y, ImageDims(800, 480))

    def test_matches_exact_floor_formula(self, rng):
        # oracle: exact rational arithmetic, independent of integer //
        for _ in range(2000):
            w, h = rng.randint(1, 5000), rng.randint(1, 5000)
            x, y = rng.randint(0, w - 1), rng.randint(0, h - 1)
            got = normalize_coord(x, y, ImageDims(w, h))
            assert got.x == Fraction(1000 * x, w).__floor__()
            assert got.y == Fraction(1000 * y, h).__floor__()
            assert 0 <= got.x <= 999 and 0 <= got.y <= 999

    def test_monotone_in_each_argument(self):
        dims = ImageDims(37, 23)
        xs = [normalize_coord(x, 0, dims).x for x in range(37)]
        ys = [normalize_coord(0, y, dims).y for y in range(23)]
        assert xs == sorted(xs)
        assert ys == sorted(ys)


class TestNormalizeBox:
    def test_per_component_floor(self):
        box = normalize_box(32, 48, 128, 256, ImageDims(640, 480))
        assert box == NormBox(50, 100, 200, 533)

    def test_full_frame(self):
        assert normalize_box(0, 0, 999, 999, ImageDims(1000, 1000)) == NormBox(0, 0, 999, 999)

    def test_degenerate_point_box(self):
        box = normalize_box(10, 10, 10, 10, ImageDims(640, 480))
        assert box.x0 == box.x1 and box.y0 == box.y1

    def test_exclusive_corner_clamped(self):
        box = normalize_box(0, 0, 640, 480, ImageDims(640, 480))
        assert box == NormBox(0, 0, 998, 997)

    def test_inverted_rejected(self):
        with pytest.raises(OutOfBounds):
            normalize_box(5, 0, 3, 10, ImageDims(640, 480))


class TestMakeGrid:
    def test_even_split(self):
        grid = make_grid(ImageDims(4, 4), 2)
        assert grid.cells == ((0, 0, 2, 2), (2, 0, 4, 2), (0, 2, 2, 4), (2, 2, 4, 4))

    def test_uneven_widths(self):
        grid = make_grid(ImageDims(5, 5), 2)
        widths = {x1 - x0 for x0, _, x1, _ in grid.cells}
        assert widths == {2, 3}
        assert grid.cells[0] == (0, 0, 2, 2)
        assert grid.cells[3] == (2, 2, 5, 5)

    def test_too_fine(self):
        with pytest.raises(GridTooFine):
            make_grid(ImageDims(3, 3), 4)

    def test_invalid(self):
        with pytest.raises(InvalidGrid):
            make_grid(ImageDims(3, 3), 0)

    def test_exact_tiling_small_sweep(self):
        # brute-force membership: every pixel covered exactly once
        for w in range(1, 33):
            for h in range(1, 33):
                for p in range(1, min(w, h, 8) + 1):
                    grid = make_grid(ImageDims(w, h), p)
                    coverage = np.zeros((h, w), dtype=np.int32)
                    for x0, y0, x1, y1 in grid.cells:
                        coverage[y0:y1, x0:x1] += 1
                    assert (coverage == 1).all(), (w, h, p)


class TestCellCenter:
    def test_small_even_grid(self):
        grid = make_grid(ImageDims(4, 4), 2)
        assert cell_center(grid, 0) == NormCoord(0, 0)

    def test_whole_image_cell(self):
        grid = make_grid(ImageDims(1000, 1000), 1)
        assert cell_center(grid, 0) == NormCoord(499, 499)

    def test_index_out_of_range(self):
        grid = make_grid(ImageDims(4, 4), 2)
        with pytest.raises(IndexOutOfRange):
            cell_center(grid, 4)


class TestCellOfPoint:
    def test_examples(self):
        grid = make_grid(ImageDims(4, 4), 2)
        assert cell_of_point(grid, 3, 0) == 1
        assert cell_of_point(grid, 0, 0) == 0
        with pytest.raises(OutOfBounds):
            cell_of_point(grid, 4, 0)

    def test_membership_equivalence_sweep(self):
        # cell_of_point agrees with direct rectangle membership everywhere
        rng = random.Random(7)
        for w in range(1, 33):
            for h in range(1, 33):
                for p in range(1, min(w, h, 8) + 1):
                    grid = make_grid(ImageDims(w, h), p)
                    index_map = np.empty((h, w), dtype=np.int64)
                    for k, (x0, y0, x1, y1) in enumerate(grid.cells):
                        index_map[y0:y1, x0:x1] = k
                    xs = np.arange(w)
                    cols = np.searchsorted(grid.col_edges(), xs, side="right") - 1
                    ys = np.arange(h)
                    rows = np.searchsorted(grid.row_edges(), ys, side="right") - 1
                    vectorized = rows[:, None] * grid.cols + cols[None, :]
                    assert (vectorized == index_map).all(), (w, h, p)
                    # tie the scalar API to the vectorized twin on a sample
                    x = rng.randrange(w)
                    y = rng.randrange(h)
                    assert cell_of_point(grid, x, y) == index_map[y, x]


def test_grid_neighbor_pairs_2x2():
    assert set(grid_neighbor_pairs(2, 2)) == {(0, 1), (0, 2), (1, 3), (2, 3)}


def _depth_program():
    dims = ImageDims(4, 4)
    items = (
        Item("cell_0", NormCoord(0, 0), Interval(0.1, 0.4)),
        Item("cell_1", NormCoord(500, 0), Interval(0.5, 0.9)),
    )
    return PerceptionProgram(
        modality="depth", images=(("img0", dims),), grid=(1, 2),
        items=items, relations=(Relation("cell_1", "in-front-of", "cell_0"),),
    )


class TestValidateProgram:
    def test_well_formed_passes(self):
        assert validate_program(_depth_program()) == []

    def test_dangling_relation(self):
        pp = _depth_program()
        bad = PerceptionProgram(
            modality=pp.modality, images=pp.images, grid=pp.grid, items=pp.items,
            relations=(Relation("cell_1", "in-front-of", "ghost"),),
        )
        assert any("dangling relation" in v for v in validate_program(bad))

    def test_readout_modality_mismatch(self):
        pp = _depth_program()
        bad = PerceptionProgram(
            modality="flow", images=pp.images, grid=pp.grid, items=pp.items)
        assert any("readout/modality mismatch" in v for v in validate_program(bad))

    def test_duplicate_ids(self):
        dims = ImageDims(4, 4)
        items = (
            Item("A", NormCoord(0, 0)),
            Item("A", NormCoord(10, 10)),
        )
        pp = PerceptionProgram(modality="points", images=(("img0", dims),), items=items)
        assert any("duplicate item id" in v for v in validate_program(pp))

    def test_empty_items_only_legal_for_detection(self):
        dims = ImageDims(4, 4)
        det = PerceptionProgram(modality="detection", images=(("img0", dims),), items=())
        assert validate_program(det) == []
        dep = PerceptionProgram(modality="depth", images=(("img0", dims),), items=())
        assert any("no items" in v for v in validate_program(dep))

    def test_partial_redaction_flagged(self):
        pp = _depth_program()
        items = (pp.items[0], Item("cell_1", NormCoord(500, 0)))
        mixed = PerceptionProgram(
            modality="depth", images=pp.images, grid=pp.grid, items=items)
        assert any("partially redacted" in v for v in validate_program(mixed))

    def test_fuzzed_generator_programs_validate(self, rng):
        for _ in range(300):
            assert validate_program(random_program(rng)) == []


class TestRedactReadouts:
    def test_strips_readouts_and_relations(self):
        redacted = redact_readouts(_depth_program())
        assert all(it.r is None for it in redacted.items)
        assert redacted.relations == ()
        assert [it.p for it in redacted.items] == ["cell_0", "cell_1"]

    def test_idempotent(self):
        once = redact_readouts(_depth_program())
        assert redact_readouts(once) == once

    def test_points_unchanged(self):
        pp = PerceptionProgram(
            modality="points", images=(("img0", ImageDims(4, 4)),),
            items=(Item("A", NormCoord(1, 2)),),
        )
        assert redact_readouts(pp) == pp
