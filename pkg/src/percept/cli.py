"""Command-line entry point: compile, validate, solve, eval, bench.

stdout carries only machine-readable payloads (program text, labels,
numbers, JSON); diagnostics go to stderr. Exit codes: 0 success, 1 input
or parse error, 2 compile/solve error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

from . import analysis, compilers, harness, ingestion, serializer, solvers
from .core import ImageDims, NormCoord, normalize_box, validate_program
from .errors import IngestError, ParseError, PerceptError


def _err(message: str):
    print(message, file=sys.stderr)


def _emit(text: str, output: str | None):
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load_program(path):
    return serializer.parse(Path(path).read_text(encoding="utf-8"))


def _parse_region(text: str) -> tuple[int, int, int, int]:
    parts = text.split(",")
    if len(parts) != 4:
        raise ValueError(f"region must be x0,y0,x1,y1 — got {text!r}")
    return tuple(int(p) for p in parts)  # type: ignore[return-value]


# ---------------------------------------------------------------------------
# subcommands


def cmd_compile(args) -> int:
    modality = args.modality
    if modality == "depth":
        field = ingestion.read_depth(args.input, convention=args.convention)
        pp = compilers.compile_depth(field, p=args.grid, tau=args.tau)
    elif modality == "flow":
        field = ingestion.read_flow(args.input)
        pp = compilers.compile_flow(field, p=args.grid, axis=args.axis)
    elif modality == "visual_correspondence":
        pp = compilers.compile_visual_correspondence(ingestion.read_matches(args.input))
    elif modality == "detection":
        pp = compilers.compile_detections(ingestion.read_detections(args.input))
    elif modality == "semantic_correspondence":
        pp = compilers.compile_semantic_correspondence(ingestion.read_candidates(args.input))
    elif modality == "points":
        pp = compilers.compile_points(ingestion.read_points(args.input))
    elif modality == "jigsaw":
        for flag, value in (("--source", args.source), ("--candidate-a", args.candidate_a),
                            ("--candidate-b", args.candidate_b), ("--region", args.region)):
            if value is None:
                raise ValueError(f"jigsaw compilation requires {flag}")
        instance = compilers.JigsawInstance(
            source=ingestion.read_image(args.source),
            region=_parse_region(args.region),
            candidate_a=ingestion.read_image(args.candidate_a),
            candidate_b=ingestion.read_image(args.candidate_b),
            strip_width=args.strip_width,
        )
        pp = compilers.compile_jigsaw(instance)
    else:
        raise ValueError(f"unknown modality {modality!r}")
    _emit(serializer.serialize(pp), args.output)
    return 0


def cmd_validate(args) -> int:
    text = Path(args.input).read_text(encoding="utf-8")
    try:
        pp = serializer.parse(text, validate=False)
    except ParseError as exc:
        print(json.dumps({"valid": False, "error": str(exc)}))
        return 1
    violations = validate_program(pp)
    print(json.dumps({"valid": not violations, "violations": violations}))
    return 0 if not violations else 2


def _candidate_boxes(path):
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    dims = ImageDims(doc["image"]["width"], doc["image"]["height"])
    out = []
    for cand in doc["candidates"]:
        out.append((cand["label"], normalize_box(*cand["box"], dims)))
    return out


def cmd_solve(args) -> int:
    task = args.task
    if task == "relative_depth":
        label = solvers.solve_relative_depth(_load_program(args.points), _load_program(args.depth))
    elif task == "multi_view":
        label = solvers.solve_multiview(_load_program(args.flow), convention=args.convention)
    elif task == "naive_correspondence":
        label = solvers.naive_correspondence(_load_program(args.points))
    elif task == "oracle_correspondence":
        points = _load_program(args.points)
        ref = next((it for it in points.items if it.p == "REF"), None)
        if ref is None:
            raise ValueError("points program has no REF item")
        label = solvers.oracle_correspondence(
            _load_program(args.matches), NormCoord(ref.c.x, ref.c.y), points)
    elif task == "jigsaw":
        label = solvers.solve_jigsaw(_load_program(args.input))
    elif task == "semantic_correspondence":
        label = solvers.solve_semantic(_load_program(args.input))
    elif task == "object_localization":
        label = solvers.solve_localization(
            _load_program(args.detections), _candidate_boxes(args.boxes), args.target)
    else:
        raise ValueError(f"unknown task {task!r}")
    print(label)
    return 0


def _ranking_from_file(path) -> list[str]:
    text = Path(path).read_text(encoding="utf-8")
    if str(path).endswith(".json"):
        ranking = json.loads(text)
        if not isinstance(ranking, list):
            raise ValueError(f"{path}: expected a JSON array of ids")
        return [str(x) for x in ranking]
    return analysis.ranking_from_depth(serializer.parse(text))


def cmd_eval(args) -> int:
    if args.metric == "kendall":
        tau = analysis.kendall_tau(_ranking_from_file(args.a), _ranking_from_file(args.b))
        print(f"{tau:.4f}")
    elif args.metric == "accuracy":
        tasks = ingestion.read_task_set(args.manifest)
        keys = [(t.id, t.answer) for t in tasks if t.answer is not None]
        predictions = []
        for line in Path(args.results).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            doc = json.loads(line)
            predictions.append((doc["task_id"], doc.get("extracted", harness.UNPARSED)))
        print(f"{analysis.accuracy(predictions, keys):.2f}")
    elif args.metric == "displacement":
        truth = ingestion.read_matches(args.truth)
        predicted = _load_program(args.predicted)
        rows, summary = analysis.displacement_error_stats(truth, predicted)
        for row in rows:
            print(json.dumps(asdict(row)))
        _err(f"matches            {summary.count}")
        _err(f"mean error (%)     {summary.mean_error_pct:.3f}")
        _err(f"median error (%)   {summary.median_error_pct:.3f}")
        _err(f"copied-input frac  {summary.copied_input_fraction:.3f}")
    else:
        raise ValueError(f"unknown metric {args.metric!r}")
    return 0


def cmd_bench(args) -> int:
    cfg = harness.EndpointConfig.from_file(args.config)
    tasks = ingestion.read_task_set(args.manifest)
    _, summary = harness.run_benchmark(
        tasks,
        setting=args.setting,
        cfg=cfg,
        out_path=args.out,
        concurrency=args.concurrency,
        resume=args.resume,
        templates_dir=args.templates_dir,
    )
    _err(f"tasks              {summary.total}")
    _err(f"failures           {summary.failures}")
    if summary.accuracy_pct is not None:
        _err(f"accuracy (%)       {summary.accuracy_pct:.2f}")
    for kind, pct in summary.accuracy_by_kind.items():
        _err(f"  {kind:<17}{pct:.2f}")
    if summary.mean_prompt_tokens is not None:
        _err(f"mean prompt toks   {summary.mean_prompt_tokens:.1f}")
    if summary.mean_completion_tokens is not None:
        _err(f"mean compl. toks   {summary.mean_completion_tokens:.1f}")
    print(json.dumps(asdict(summary)))
    return 0


# ---------------------------------------------------------------------------
# argument wiring


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="percept")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="compile a tool output into program text")
    p.add_argument("--modality", required=True,
                   choices=["depth", "flow", "visual_correspondence", "jigsaw",
                            "detection", "semantic_correspondence", "points"])
    p.add_argument("--input", help="tool output file (all modalities except jigsaw)")
    p.add_argument("--output", "-o", help="write program text here (default stdout)")
    p.add_argument("--grid", type=int, default=compilers.DEFAULT_GRID,
                   help="grid order P for depth/flow")
    p.add_argument("--tau", type=float, default=compilers.DEFAULT_TAU,
                   help="depth-relation margin on the [0,1] scale")
    p.add_argument("--axis", choices=["horizontal", "vertical"], default="horizontal")
    p.add_argument("--convention", choices=list(ingestion.DEPTH_CONVENTIONS),
                   default="nearer_is_larger")
    p.add_argument("--source", help="jigsaw source image")
    p.add_argument("--candidate-a", help="jigsaw candidate A image")
    p.add_argument("--candidate-b", help="jigsaw candidate B image")
    p.add_argument("--region", help="jigsaw missing region as x0,y0,x1,y1 (half-open)")
    p.add_argument("--strip-width", type=int, default=None)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("validate", help="parse program text and report violations")
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("solve", help="run a deterministic program-only solver")
    p.add_argument("--task", required=True,
                   choices=["relative_depth", "multi_view", "naive_correspondence",
                            "oracle_correspondence", "jigsaw", "semantic_correspondence",
                            "object_localization"])
    p.add_argument("--input", help="program file (jigsaw, semantic_correspondence)")
    p.add_argument("--points", help="points program file")
    p.add_argument("--depth", help="depth program file")
    p.add_argument("--flow", help="flow program file")
    p.add_argument("--matches", help="visual correspondence program file")
    p.add_argument("--detections", help="detection program file")
    p.add_argument("--boxes", help="candidate boxes JSON (pixel coordinates)")
    p.add_argument("--target", default="", help="target label for object localization")
    p.add_argument("--convention", choices=list(solvers.MULTIVIEW_CONVENTIONS),
                   default="camera_opposes_flow")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("eval", help="analysis metrics over programs and results")
    p.add_argument("--metric", required=True, choices=["kendall", "accuracy", "displacement"])
    p.add_argument("--a", help="kendall: depth program (.p2) or ranking (.json)")
    p.add_argument("--b", help="kendall: depth program (.p2) or ranking (.json)")
    p.add_argument("--results", help="accuracy: benchmark results JSONL")
    p.add_argument("--manifest", help="accuracy: task manifest JSONL")
    p.add_argument("--truth", help="displacement: truth matches JSON")
    p.add_argument("--predicted", help="displacement: predicted program (.p2)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="run a benchmark against a chat endpoint")
    p.add_argument("--manifest", required=True)
    p.add_argument("--setting", required=True, choices=list(harness.SETTINGS))
    p.add_argument("--config", required=True, help="endpoint config file (key = value)")
    p.add_argument("--out", required=True, help="results JSONL path")
    p.add_argument("--concurrency", type=int, default=4)
    p.add_argument("--resume", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--templates-dir", default=None)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (IngestError, ParseError, FileNotFoundError) as exc:
        _err(f"error: {exc}")
        return 1
    except (PerceptError, ValueError, KeyError) as exc:
        _err(f"error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
