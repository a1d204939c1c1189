"""Writers for the ingestion exchange formats, plus export manifests.

These mirror the consumer-side contracts exactly: NPY float32 (H, W) for
depth, Middlebury .flo ("PIEH", little-endian) for flow, and the JSON
schemas for matches, detections, candidate scores, and labeled points.
Every export can record an AdapterManifest with a checksum for
provenance.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

FLO_MAGIC = b"PIEH"


@dataclass
class AdapterManifest:
    tool: str
    version: str
    inputs: list[str]
    output: str
    format: str
    sha256: str = ""
    extra: dict = field(default_factory=dict)

    def write(self, path):
        Path(path).write_text(json.dumps(asdict(self), indent=2) + "\n", encoding="utf-8")


def sha256_of(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def finish_manifest(tool: str, version: str, inputs, output, fmt: str,
                    manifest_out=None, **extra) -> AdapterManifest:
    manifest = AdapterManifest(
        tool=tool, version=version, inputs=[str(p) for p in inputs],
        output=str(output), format=fmt, sha256=sha256_of(output), extra=dict(extra))
    if manifest_out:
        manifest.write(manifest_out)
    return manifest


def write_depth_npy(values: np.ndarray, path):
    arr = np.asarray(values, dtype=np.float32)
    if arr.ndim != 2:
        raise ValueError(f"depth must be 2-D, got {arr.shape}")
    np.save(path, arr)


def write_flo(u: np.ndarray, v: np.ndarray, path):
    u = np.asarray(u, dtype="<f4")
    v = np.asarray(v, dtype="<f4")
    if u.shape != v.shape or u.ndim != 2:
        raise ValueError(f"flow components must share a 2-D shape, got {u.shape}/{v.shape}")
    h, w = u.shape
    header = FLO_MAGIC + np.array([w, h], dtype="<i4").tobytes()
    Path(path).write_bytes(header + np.stack([u, v], axis=-1).tobytes())


def _json_dump(doc, path):
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def write_matches_json(dims_ref, dims_tgt, matches, path):
    _json_dump({
        "ref": {"width": dims_ref[0], "height": dims_ref[1]},
        "tgt": {"width": dims_tgt[0], "height": dims_tgt[1]},
        "matches": [[[int(x1), int(y1)], [int(x2), int(y2)]]
                    for (x1, y1), (x2, y2) in matches],
    }, path)


def write_detections_json(dims, detections, path):
    _json_dump({
        "image": {"width": dims[0], "height": dims[1]},
        "detections": [
            {"label": str(label), "score": float(score),
             "box": [int(b) for b in box]}
            for label, score, box in detections
        ],
    }, path)


def write_candidates_json(dims, candidates, path):
    _json_dump({
        "image": {"width": dims[0], "height": dims[1]},
        "candidates": [
            {"label": str(label), "point": [int(x), int(y)], "score": float(score)}
            for label, (x, y), score in candidates
        ],
    }, path)


def write_points_json(dims, points, path):
    _json_dump({
        "image": {"width": dims[0], "height": dims[1]},
        "points": [
            {"label": str(label), "point": [int(x), int(y)]}
            for label, (x, y) in points
        ],
    }, path)
