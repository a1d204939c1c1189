"""Adapter command line: one subcommand per export, plus the converter."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict

from .blink import convert_blink
from .depth import export_depth
from .detect import export_detections
from .errors import AdapterError
from .flow import export_flow
from .matching import export_matches
from .similarity import export_similarities


def _point(text: str) -> tuple[int, int]:
    x, y = text.split(",")
    return (int(x), int(y))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="p2-adapt")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("depth", help="export an NPY depth map")
    p.add_argument("--image", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--backend", choices=["proxy", "neural"], default="proxy")
    p.add_argument("--manifest-out")

    p = sub.add_parser("flow", help="export a .flo field for an image pair")
    p.add_argument("--first", required=True)
    p.add_argument("--second", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--backend", choices=["farneback", "neural"], default="farneback")
    p.add_argument("--manifest-out")

    p = sub.add_parser("matches", help="export a matches JSON for an image pair")
    p.add_argument("--first", required=True)
    p.add_argument("--second", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--backend", choices=["klt", "neural"], default="klt")
    p.add_argument("--manifest-out")

    p = sub.add_parser("similarities", help="export a candidates JSON for point scoring")
    p.add_argument("--source", required=True)
    p.add_argument("--source-point", required=True, type=_point, metavar="X,Y")
    p.add_argument("--target", required=True)
    p.add_argument("--candidate", dest="candidates", required=True, type=_point,
                   action="append", metavar="X,Y")
    p.add_argument("--out", required=True)
    p.add_argument("--backend", choices=["patch", "neural"], default="patch")
    p.add_argument("--manifest-out")

    p = sub.add_parser("detections", help="export a detections JSON for a label query")
    p.add_argument("--image", required=True)
    p.add_argument("--label", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--backend", choices=["contour", "neural"], default="contour")
    p.add_argument("--manifest-out")

    p = sub.add_parser("convert-blink", help="convert an upstream dump to a task manifest")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "depth":
            manifest = export_depth(args.image, args.out, backend=args.backend,
                                    manifest_out=args.manifest_out)
        elif args.command == "flow":
            manifest = export_flow(args.first, args.second, args.out,
                                   backend=args.backend, manifest_out=args.manifest_out)
        elif args.command == "matches":
            manifest = export_matches(args.first, args.second, args.out,
                                      backend=args.backend, manifest_out=args.manifest_out)
        elif args.command == "similarities":
            manifest = export_similarities(args.source, args.source_point, args.target,
                                           args.candidates, args.out,
                                           backend=args.backend,
                                           manifest_out=args.manifest_out)
        elif args.command == "detections":
            manifest = export_detections(args.image, args.label, args.out,
                                         backend=args.backend,
                                         manifest_out=args.manifest_out)
        else:
            stats = convert_blink(args.dataset, args.out)
            print(json.dumps(stats))
            return 0
        print(json.dumps(asdict(manifest)))
        return 0
    except AdapterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
