"""percept: symbolic perception programs compiled from vision-tool output.

The package turns dense expert-tool outputs (depth fields, optical flow,
keypoint matches, detections, candidate scores, jigsaw strips, labeled
points) into compact structured text programs, provides deterministic
solvers and analysis metrics over those programs, and ships a benchmark
harness for chat-completion endpoints.
"""

from .analysis import (
    DisplacementSummary,
    MatchErrorRow,
    Ranking,
    accuracy,
    displacement_error_stats,
    kendall_tau,
    ranking_from_depth,
)
from .compilers import (
    CandidateScoreSet,
    DepthField,
    Detection,
    DetectionSet,
    FlowField,
    JigsawInstance,
    LabeledPoints,
    MatchSet,
    ScoredCandidate,
    compile_depth,
    compile_detections,
    compile_flow,
    compile_jigsaw,
    compile_points,
    compile_semantic_correspondence,
    compile_visual_correspondence,
)
from .core import (
    Confidence,
    Direction,
    GridSpec,
    ImageDims,
    Interval,
    Item,
    NormBox,
    NormCoord,
    PerceptionProgram,
    Point,
    Relation,
    Score,
    cell_center,
    cell_of_point,
    make_grid,
    normalize_box,
    normalize_coord,
    redact_readouts,
    validate_program,
)
from .serializer import parse, quantize, serialize
from .solvers import (
    box_iou,
    naive_correspondence,
    oracle_correspondence,
    solve_jigsaw,
    solve_localization,
    solve_multiview,
    solve_relative_depth,
    solve_semantic,
)

__version__ = "0.1.0"

__all__ = [
    "CandidateScoreSet", "Confidence", "DepthField", "Detection", "DetectionSet",
    "Direction", "DisplacementSummary", "FlowField", "GridSpec", "ImageDims",
    "Interval", "Item", "JigsawInstance", "LabeledPoints", "MatchErrorRow",
    "MatchSet", "NormBox", "NormCoord", "PerceptionProgram", "Point", "Ranking",
    "Relation", "Score", "ScoredCandidate", "accuracy", "box_iou", "cell_center",
    "cell_of_point", "compile_depth", "compile_detections", "compile_flow",
    "compile_jigsaw", "compile_points", "compile_semantic_correspondence",
    "compile_visual_correspondence", "displacement_error_stats", "kendall_tau",
    "make_grid", "naive_correspondence", "normalize_box", "normalize_coord",
    "oracle_correspondence", "parse", "quantize", "ranking_from_depth",
    "redact_readouts", "serialize", "solve_jigsaw", "solve_localization",
    "solve_multiview", "solve_relative_depth", "solve_semantic",
    "validate_program",
]
