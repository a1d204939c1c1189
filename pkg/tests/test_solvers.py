"""Program-only solvers: worked examples and deterministic tie-breaks."""

import numpy as np
import pytest

from percept.compilers import (
    LabeledPoints,
    MatchSet,
    compile_points,
    compile_visual_correspondence,
)
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
    Score,
)
from percept.errors import (
    EmptyInput,
    MissingGrid,
    MissingItems,
    MissingRef,
    NoDetections,
    PointOutsideGrid,
    TieVote,
    WrongModality,
)
from percept.solvers import (
    box_iou,
    naive_correspondence,
    oracle_correspondence,
    solve_jigsaw,
    solve_localization,
    solve_multiview,
    solve_relative_depth,
    solve_semantic,
)


def depth_program(grid, dims, intervals):
    rows, cols = grid
    items = tuple(
        Item(f"cell_{k}", NormCoord(0, 0), Interval(lo, hi))
        for k, (lo, hi) in enumerate(intervals)
    )
    return PerceptionProgram(modality="depth", images=(("img0", dims),),
                             grid=grid, items=items)


def points_program(dims, points):
    return compile_points(LabeledPoints(dims, points))


class TestSolveRelativeDepth:
    def test_disjoint_intervals(self):
        depth = depth_program((1, 2), ImageDims(4, 2), [(0.1, 0.2), (0.8, 0.9)])
        points = points_program(ImageDims(4, 2), [("A", (3, 0)), ("B", (0, 0))])
        assert solve_relative_depth(points, depth) == "A"

    def test_midpoint_tie_breaks_on_lower_bound(self):
        # A in [0.4, 0.6], B in [0.5, 0.5]: midpoints tie, B has larger lo
        depth = depth_program((1, 2), ImageDims(4, 2), [(0.4, 0.6), (0.5, 0.5)])
        points = points_program(ImageDims(4, 2), [("A", (0, 0)), ("B", (3, 0))])
        assert solve_relative_depth(points, depth) == "B"

    def test_full_tie_breaks_alphabetical(self):
        depth = depth_program((1, 2), ImageDims(4, 2), [(0.5, 0.5), (0.5, 0.5)])
        points = points_program(ImageDims(4, 2), [("B", (0, 0)), ("A", (3, 0))])
        assert solve_relative_depth(points, depth) == "A"

    def test_point_at_lattice_edge_outside(self):
        depth = depth_program((1, 1), ImageDims(4, 4), [(0.5, 0.5)])
        points = PerceptionProgram(
            modality="points", images=(("img0", ImageDims(4, 4)),),
            items=(Item("A", NormCoord(1000, 1000)),))
        with pytest.raises(PointOutsideGrid):
            solve_relative_depth(points, depth)

    def test_missing_grid(self):
        depth = PerceptionProgram(
            modality="depth", images=(("img0", ImageDims(4, 4)),),
            items=(Item("cell_0", NormCoord(0, 0), Interval(0.1, 0.2)),))
        points = points_program(ImageDims(4, 4), [("A", (1, 1))])
        with pytest.raises(MissingGrid):
            solve_relative_depth(points, depth)

    def test_against_raw_field_on_separated_cells(self, nprng):
        # compiled program midpoints must pick the same cell as the raw field
        # when cell depth bands are well separated
        from percept.compilers import DepthField, compile_depth

        w = h = 16
        base = np.repeat(np.arange(4), 4)[None, :] / 4.0
        vals = np.repeat(base, h, axis=0) + nprng.random((h, w)) * 0.2
        vals = np.clip(vals, 0.0, 1.0)
        depth = compile_depth(DepthField(ImageDims(w, h), vals), p=4, tau=0.05)
        points = points_program(ImageDims(w, h),
                                [("A", (1, 8)), ("B", (14, 8)), ("C", (6, 2))])
        assert solve_relative_depth(points, depth) == "B"


class TestSolveMultiview:
    @staticmethod
    def _flow(labels, dims=ImageDims(4, 4)):
        items = tuple(
            Item(f"cell_{k}", NormCoord(0, 0), Direction(lab))
            for k, lab in enumerate(labels))
        return PerceptionProgram(modality="flow", images=(("img0", dims),),
                                 grid=(2, 2), items=items)

    def test_majority_inverted_by_default(self):
        pp = self._flow(["left", "left", "left", "right"])
        assert solve_multiview(pp) == "right"

    def test_follow_convention(self):
        pp = self._flow(["right", "right", "right", "right"])
        assert solve_multiview(pp, convention="camera_follows_flow") == "right"
        assert solve_multiview(pp) == "left"

    def test_tie(self):
        with pytest.raises(TieVote):
            solve_multiview(self._flow(["left", "left", "right", "right"]))

    def test_wrong_modality(self):
        pp = points_program(ImageDims(4, 4), [("A", (0, 0))])
        with pytest.raises(WrongModality):
            solve_multiview(pp)


class TestNaiveCorrespondence:
    def test_example(self):
        pp = points_program(ImageDims(1000, 1000), [
            ("REF", (100, 100)), ("A", (110, 105)), ("B", (500, 500)), ("C", (900, 100))])
        assert naive_correspondence(pp) == "A"

    def test_single_alternative(self):
        pp = points_program(ImageDims(1000, 1000), [("REF", (0, 0)), ("D", (900, 900))])
        assert naive_correspondence(pp) == "D"

    def test_missing_ref(self):
        pp = points_program(ImageDims(1000, 1000), [("A", (1, 1)), ("B", (2, 2))])
        with pytest.raises(MissingRef):
            naive_correspondence(pp)

    def test_invariant_under_farther_alternatives(self, rng):
        dims = ImageDims(1000, 1000)
        for _ in range(50):
            ref = (rng.randint(0, 999), rng.randint(0, 999))
            best = (min(ref[0] + 3, 999), min(ref[1] + 4, 999))
            pp = points_program(dims, [("REF", ref), ("A", best)])
            baseline = naive_correspondence(pp)
            far = (
                (ref[0] + 500) % 1000, (ref[1] + 500) % 1000)
            extended = points_program(dims, [("REF", ref), ("A", best), ("Z", far)])
            assert naive_correspondence(extended) == baseline

    def test_distance_ties_alphabetical(self):
        pp = points_program(ImageDims(1000, 1000), [
            ("REF", (500, 500)), ("B", (490, 500)), ("A", (510, 500))])
        assert naive_correspondence(pp) == "A"


class TestOracleCorrespondence:
    def test_two_stage_example(self):
        matches = compile_visual_correspondence(MatchSet(
            ImageDims(1000, 1000), ImageDims(1000, 1000), [((100, 100), (300, 100))]))
        alts = points_program(ImageDims(1000, 1000), [("A", (305, 95)), ("B", (700, 700))])
        assert oracle_correspondence(matches, NormCoord(102, 98), alts) == "A"

    def test_exact_ref_hit(self):
        matches = compile_visual_correspondence(MatchSet(
            ImageDims(1000, 1000), ImageDims(1000, 1000),
            [((100, 100), (300, 100)), ((200, 200), (900, 900))]))
        alts = points_program(ImageDims(1000, 1000), [("A", (300, 100)), ("B", (900, 900))])
        assert oracle_correspondence(matches, NormCoord(100, 100), alts) == "A"

    def test_empty_matches(self):
        empty = PerceptionProgram(
            modality="visual_correspondence",
            images=(("img0", ImageDims(4, 4)), ("img1", ImageDims(4, 4))), items=())
        alts = points_program(ImageDims(4, 4), [("A", (0, 0))])
        with pytest.raises(EmptyInput):
            oracle_correspondence(empty, NormCoord(0, 0), alts)

    def test_translation_scenes_are_solved(self, rng):
        dims = ImageDims(1000, 1000)
        for _ in range(50):
            dx, dy = rng.randint(-200, 200), rng.randint(-200, 200)
            pts = [(rng.randint(250, 750), rng.randint(250, 750)) for _ in range(8)]
            matches = MatchSet(dims, dims, [
                ((x, y), (x + dx, y + dy)) for x, y in pts])
            ref = pts[0]
            correct = (ref[0] + dx, ref[1] + dy)
            decoys = [((correct[0] + 333) % 1000, (correct[1] + 444) % 1000),
                      ((correct[0] + 111) % 1000, (correct[1] + 222) % 1000)]
            alts = points_program(dims, [("A", decoys[0]), ("B", correct), ("C", decoys[1])])
            got = oracle_correspondence(
                compile_visual_correspondence(matches), NormCoord(*ref), alts)
            assert got == "B"


def jigsaw_program(a_scores, b_scores):
    box = NormBox(0, 0, 100, 900)
    items = (
        Item("left_A", box, Score(a_scores[0])),
        Item("top_A", box, Score(a_scores[1])),
        Item("left_B", box, Score(b_scores[0])),
        Item("top_B", box, Score(b_scores[1])),
    )
    return PerceptionProgram(
        modality="jigsaw",
        images=(("img0", ImageDims(10, 10)), ("img1", ImageDims(5, 5)),
                ("img2", ImageDims(5, 5))),
        items=items)


class TestSolveJigsaw:
    def test_dominant(self):
        assert solve_jigsaw(jigsaw_program((0.9, 0.8), (0.3, 0.4))) == "A"

    def test_tie_goes_to_a(self):
        assert solve_jigsaw(jigsaw_program((0.5, 0.5), (0.5, 0.5))) == "A"

    def test_b_wins(self):
        assert solve_jigsaw(jigsaw_program((0.2, 0.3), (0.8, 0.9))) == "B"

    def test_missing_item(self):
        pp = jigsaw_program((0.5, 0.5), (0.5, 0.5))
        truncated = PerceptionProgram(
            modality="jigsaw", images=pp.images, items=pp.items[:3])
        with pytest.raises(MissingItems):
            solve_jigsaw(truncated)


class TestSolveSemantic:
    @staticmethod
    def _semantic(scores):
        items = tuple(
            Item(lab, NormCoord(0, 0), Score(v)) for lab, v in sorted(scores.items()))
        return PerceptionProgram(
            modality="semantic_correspondence",
            images=(("img0", ImageDims(10, 10)),), items=items)

    def test_argmax(self):
        assert solve_semantic(self._semantic(
            {"A": 0.91, "B": 0.40, "C": 0.22, "D": 0.63})) == "A"

    def test_all_equal_alphabetical(self):
        assert solve_semantic(self._semantic({"D": 0.5, "C": 0.5, "B": 0.5, "A": 0.5})) == "A"

    def test_empty(self):
        pp = PerceptionProgram(
            modality="semantic_correspondence",
            images=(("img0", ImageDims(10, 10)),), items=())
        with pytest.raises(EmptyInput):
            solve_semantic(pp)


def detection_program(dets):
    items = tuple(
        Item(f"det_{i}", box, Confidence(score), label)
        for i, (label, score, box) in enumerate(dets))
    return PerceptionProgram(
        modality="detection", images=(("img0", ImageDims(10, 10)),), items=items)


class TestSolveLocalization:
    def test_identical_box(self):
        box = NormBox(100, 100, 300, 300)
        dets = detection_program([("dog", 0.9, box)])
        candidates = [("A", box), ("B", NormBox(500, 500, 700, 700))]
        assert solve_localization(dets, candidates, "dog") == "A"

    def test_overlap_decides(self):
        det_box = NormBox(480, 480, 700, 700)
        dets = detection_program([("cat", 0.7, det_box)])
        candidates = [("A", NormBox(0, 0, 200, 200)), ("B", NormBox(500, 500, 720, 720))]
        assert solve_localization(dets, candidates, "cat") == "B"

    def test_label_filter_case_insensitive(self):
        dets = detection_program([
            ("Dog", 0.4, NormBox(0, 0, 100, 100)),
            ("cat", 0.99, NormBox(500, 500, 600, 600)),
        ])
        candidates = [("A", NormBox(0, 0, 100, 100)), ("B", NormBox(500, 500, 600, 600))]
        assert solve_localization(dets, candidates, "DOG") == "A"

    def test_no_label_match_falls_back_to_all(self):
        dets = detection_program([("cat", 0.99, NormBox(500, 500, 600, 600))])
        candidates = [("A", NormBox(0, 0, 100, 100)), ("B", NormBox(500, 500, 600, 600))]
        assert solve_localization(dets, candidates, "zebra") == "B"

    def test_empty_detections(self):
        dets = detection_program([])
        with pytest.raises(NoDetections):
            solve_localization(dets, [("A", NormBox(0, 0, 1, 1))], "dog")

    def test_iou_values(self):
        a = NormBox(0, 0, 100, 100)
        assert box_iou(a, a) == 1.0
        assert box_iou(a, NormBox(200, 200, 300, 300)) == 0.0
        assert box_iou(a, NormBox(50, 0, 150, 100)) == pytest.approx(1.0 / 3.0)
