"""Readers for expert-tool outputs and task manifests.

Depth arrives as NPY/PFM/16-bit PNG and is always min-max normalized to
[0, 1] with the nearer-is-larger orientation; flow as Middlebury .flo or
NPY; matches, detections, candidate scores, and labeled points as JSON
documents; tasks as a JSONL manifest with image paths relative to the
manifest file. Every reader enforces a file-size cap and reports schema
problems with a JSON-pointer path.
"""

from __future__ import annotations

import io
import json
import math
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .compilers import (
    CandidateScoreSet,
    DepthField,
    Detection,
    DetectionSet,
    FlowField,
    LabeledPoints,
    MatchSet,
    ScoredCandidate,
)
from .core import ImageDims
from .errors import (
    BadMagic,
    CorruptFile,
    FileTooLarge,
    SchemaViolation,
    TruncatedFile,
    UnsupportedFormat,
)

MAX_FILE_BYTES = 64 * 1024 * 1024
FLO_MAGIC = b"PIEH"  # little-endian float32 202021.25

TASK_KINDS = (
    "multi_view",
    "relative_depth",
    "visual_correspondence",
    "jigsaw",
    "object_localization",
    "semantic_correspondence",
)

DEPTH_CONVENTIONS = ("nearer_is_larger", "farther_is_larger")


def _read_bytes(path, max_bytes: int) -> bytes:
    path = Path(path)
    try:
        size = path.stat().st_size
    except OSError as exc:
        raise CorruptFile(f"cannot stat {path}: {exc}") from None
    if size > max_bytes:
        raise FileTooLarge(f"{path} is {size} bytes, limit {max_bytes}")
    try:
        return path.read_bytes()
    except OSError as exc:
        raise CorruptFile(f"cannot read {path}: {exc}") from None


# ---------------------------------------------------------------------------
# depth


def read_depth(path, convention: str = "nearer_is_larger",
               max_bytes: int = MAX_FILE_BYTES) -> DepthField:
    """Load a depth map and normalize it to [0, 1], larger = nearer.

    A constant field maps to all 0.5. ``farther_is_larger`` flips the
    normalized values so the output orientation is always the same.
    """
    if convention not in DEPTH_CONVENTIONS:
        raise ValueError(f"unknown depth convention {convention!r}")
    data = _read_bytes(path, max_bytes)
    if data[:6] == b"\x93NUMPY":
        arr = _load_npy(data, path)
        if arr.ndim != 2:
            raise UnsupportedFormat(f"{path}: depth NPY must be 2-D, got shape {arr.shape}")
    elif data[:2] in (b"Pf", b"PF"):
        arr = _load_pfm(data, path)
    elif data[:8] == b"\x89PNG\r\n\x1a\n":
        arr = _load_png_gray(data, path)
    else:
        raise UnsupportedFormat(f"{path}: not an NPY, PFM, or PNG depth file")

    arr = arr.astype(np.float64)
    if not np.isfinite(arr).all():
        raise CorruptFile(f"{path}: non-finite depth values")
    lo, hi = float(arr.min()), float(arr.max())
    if lo == hi:
        arr = np.full_like(arr, 0.5)
    else:
        arr = (arr - lo) / (hi - lo)
    if convention == "farther_is_larger":
        arr = 1.0 - arr
    h, w = arr.shape
    return DepthField(dims=ImageDims(w, h), values=arr)


def _load_npy(data: bytes, path) -> np.ndarray:
    try:
        arr = np.load(io.BytesIO(data), allow_pickle=False)
    except (ValueError, OSError) as exc:
        raise CorruptFile(f"{path}: bad NPY: {exc}") from None
    if not np.issubdtype(arr.dtype, np.floating):
        raise UnsupportedFormat(f"{path}: NPY dtype {arr.dtype} is not float")
    return arr


def _load_pfm(data: bytes, path) -> np.ndarray:
    if data[:2] == b"PF":
        raise UnsupportedFormat(f"{path}: color PFM not supported for depth")
    try:
        parts = data.split(b"\n", 3)
        if len(parts) < 4:
            raise ValueError("missing header lines")
        dims = parts[1].split()
        w, h = int(dims[0]), int(dims[1])
        scale = float(parts[2])
        payload = parts[3]
    except (ValueError, IndexError) as exc:
        raise CorruptFile(f"{path}: bad PFM header: {exc}") from None
    if w < 1 or h < 1:
        raise CorruptFile(f"{path}: bad PFM dims {w}x{h}")
    endian = "<" if scale < 0 else ">"
    need = w * h * 4
    if len(payload) < need:
        raise TruncatedFile(f"{path}: PFM payload {len(payload)} bytes, need {need}")
    arr = np.frombuffer(payload[:need], dtype=endian + "f4").reshape(h, w)
    return np.flipud(arr).copy()  # PFM stores rows bottom-to-top


def _load_png_gray(data: bytes, path) -> np.ndarray:
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except (UnidentifiedImageError, OSError) as exc:
        raise CorruptFile(f"{path}: bad PNG: {exc}") from None
    if img.mode not in ("I", "I;16", "I;16B", "I;16L"):
        raise UnsupportedFormat(f"{path}: expected 16-bit grayscale PNG, got mode {img.mode}")
    return np.asarray(img, dtype=np.float64)


# ---------------------------------------------------------------------------
# optical flow


def read_flow(path, max_bytes: int = MAX_FILE_BYTES) -> FlowField:
    """Load a flow field from Middlebury .flo or an NPY (H, W, 2) array."""
    data = _read_bytes(path, max_bytes)
    if data[:6] == b"\x93NUMPY":
        arr = _load_npy(data, path)
        if arr.ndim != 3 or arr.shape[2] != 2:
            raise UnsupportedFormat(f"{path}: flow NPY must be (H, W, 2), got {arr.shape}")
        h, w = arr.shape[:2]
        return FlowField(dims=ImageDims(w, h), u=arr[..., 0], v=arr[..., 1])

    if data[:4] != FLO_MAGIC:
        raise BadMagic(f"{path}: bad .flo magic {data[:4]!r}")
    if len(data) < 12:
        raise TruncatedFile(f"{path}: .flo header truncated")
    w, h = struct.unpack("<ii", data[4:12])
    if w < 1 or h < 1:
        raise CorruptFile(f"{path}: bad .flo dims {w}x{h}")
    need = 12 + w * h * 2 * 4
    if len(data) < need:
        raise TruncatedFile(f"{path}: .flo payload {len(data) - 12} bytes, need {need - 12}")
    if len(data) > need:
        raise CorruptFile(f"{path}: {len(data) - need} trailing bytes after .flo payload")
    uv = np.frombuffer(data[12:], dtype="<f4").reshape(h, w, 2)
    return FlowField(dims=ImageDims(w, h), u=uv[..., 0].astype(np.float64),
                     v=uv[..., 1].astype(np.float64))


def write_flo(field: FlowField, path):
    """Write a FlowField as a Middlebury .flo file (inverse of read_flow)."""
    uv = np.stack([field.u, field.v], axis=-1).astype("<f4")
    with open(path, "wb") as fh:
        fh.write(FLO_MAGIC)
        fh.write(struct.pack("<ii", field.dims.width, field.dims.height))
        fh.write(uv.tobytes())


# ---------------------------------------------------------------------------
# JSON documents


def _load_json(path, max_bytes: int):
    data = _read_bytes(path, max_bytes)
    try:
        return json.loads(data)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"{path}: not valid JSON: {exc.msg}") from None


def _expect(cond: bool, message: str, pointer: str):
    if not cond:
        raise SchemaViolation(message, pointer)


def _dims_of(doc, pointer: str) -> ImageDims:
    _expect(isinstance(doc, dict), "expected object with width/height", pointer)
    for key in ("width", "height"):
        _expect(isinstance(doc.get(key), int) and doc[key] >= 1,
                f"{key} must be a positive integer", f"{pointer}/{key}")
    return ImageDims(doc["width"], doc["height"])


def _point_of(doc, dims: ImageDims, pointer: str) -> tuple[int, int]:
    _expect(isinstance(doc, list) and len(doc) == 2, "point must be [x, y]", pointer)
    x, y = doc
    _expect(isinstance(x, int) and isinstance(y, int), "point components must be integers", pointer)
    _expect(0 <= x < dims.width and 0 <= y < dims.height,
            f"point ({x},{y}) outside {dims.width}x{dims.height}", pointer)
    return (x, y)


def read_matches(path, max_bytes: int = MAX_FILE_BYTES) -> MatchSet:
    doc = _load_json(path, max_bytes)
    _expect(isinstance(doc, dict), "top level must be an object", "")
    ref = _dims_of(doc.get("ref"), "/ref")
    tgt = _dims_of(doc.get("tgt"), "/tgt")
    raw = doc.get("matches")
    _expect(isinstance(raw, list), "matches must be a list", "/matches")
    matches = []
    for i, pair in enumerate(raw):
        ptr = f"/matches/{i}"
        _expect(isinstance(pair, list) and len(pair) == 2,
                "match must be [[x1,y1],[x2,y2]]", ptr)
        matches.append((
            _point_of(pair[0], ref, f"{ptr}/0"),
            _point_of(pair[1], tgt, f"{ptr}/1"),
        ))
    return MatchSet(dims_ref=ref, dims_tgt=tgt, matches=matches)


def read_detections(path, max_bytes: int = MAX_FILE_BYTES) -> DetectionSet:
    doc = _load_json(path, max_bytes)
    _expect(isinstance(doc, dict), "top level must be an object", "")
    dims = _dims_of(doc.get("image"), "/image")
    raw = doc.get("detections")
    _expect(isinstance(raw, list), "detections must be a list", "/detections")
    dets = []
    for i, det in enumerate(raw):
        ptr = f"/detections/{i}"
        _expect(isinstance(det, dict), "detection must be an object", ptr)
        label = det.get("label")
        _expect(isinstance(label, str) and label != "", "label must be a non-empty string",
                f"{ptr}/label")
        score = det.get("score")
        _expect(isinstance(score, (int, float)) and not isinstance(score, bool)
                and math.isfinite(score) and 0.0 <= score <= 1.0,
                "score must lie in [0, 1]", f"{ptr}/score")
        box = det.get("box")
        _expect(isinstance(box, list) and len(box) == 4
                and all(isinstance(v, int) for v in box),
                "box must be [x0, y0, x1, y1] integers", f"{ptr}/box")
        _expect(box[0] <= box[2] and box[1] <= box[3], "box is inverted", f"{ptr}/box")
        dets.append(Detection(label=label, score=float(score), box=tuple(box)))
    return DetectionSet(dims=dims, detections=dets)


def read_candidates(path, max_bytes: int = MAX_FILE_BYTES) -> CandidateScoreSet:
    doc = _load_json(path, max_bytes)
    _expect(isinstance(doc, dict), "top level must be an object", "")
    dims = _dims_of(doc.get("image"), "/image")
    raw = doc.get("candidates")
    _expect(isinstance(raw, list) and raw, "candidates must be a non-empty list", "/candidates")
    cands = []
    labels = []
    for i, cand in enumerate(raw):
        ptr = f"/candidates/{i}"
        _expect(isinstance(cand, dict), "candidate must be an object", ptr)
        label = cand.get("label")
        _expect(isinstance(label, str) and len(label) == 1 and label.isupper(),
                "label must be a single uppercase letter", f"{ptr}/label")
        point = _point_of(cand.get("point"), dims, f"{ptr}/point")
        score = cand.get("score")
        _expect(isinstance(score, (int, float)) and not isinstance(score, bool)
                and math.isfinite(score), "score must be a finite number", f"{ptr}/score")
        labels.append(label)
        cands.append(ScoredCandidate(label=label, point=point, score=float(score)))
    expected = [chr(ord("A") + i) for i in range(len(labels))]
    _expect(sorted(labels) == expected,
            f"labels must be exactly {''.join(expected)}, got {''.join(sorted(labels))}",
            "/candidates")
    return CandidateScoreSet(dims_tgt=dims, candidates=cands)


def read_points(path, max_bytes: int = MAX_FILE_BYTES) -> LabeledPoints:
    doc = _load_json(path, max_bytes)
    _expect(isinstance(doc, dict), "top level must be an object", "")
    dims = _dims_of(doc.get("image"), "/image")
    raw = doc.get("points")
    _expect(isinstance(raw, list) and raw, "points must be a non-empty list", "/points")
    seen = set()
    points = []
    for i, entry in enumerate(raw):
        ptr = f"/points/{i}"
        _expect(isinstance(entry, dict), "point entry must be an object", ptr)
        label = entry.get("label")
        _expect(isinstance(label, str) and label != "", "label must be a non-empty string",
                f"{ptr}/label")
        _expect(label not in seen, f"duplicate label {label!r}", f"{ptr}/label")
        seen.add(label)
        points.append((label, _point_of(entry.get("point"), dims, f"{ptr}/point")))
    return LabeledPoints(dims=dims, points=points)


# ---------------------------------------------------------------------------
# images


def read_image(path, max_bytes: int = MAX_FILE_BYTES) -> np.ndarray:
    """Load a PNG/JPEG as an (H, W, 3) RGB array in [0, 1]."""
    data = _read_bytes(path, max_bytes)
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except UnidentifiedImageError:
        raise UnsupportedFormat(f"{path}: not a recognized image") from None
    except OSError as exc:
        raise CorruptFile(f"{path}: {exc}") from None
    if img.format not in ("PNG", "JPEG"):
        raise UnsupportedFormat(f"{path}: format {img.format} not supported")
    if img.mode in ("I", "I;16", "I;16B", "I;16L"):
        arr = np.asarray(img, dtype=np.float64) / 65535.0
        arr = np.clip(arr, 0.0, 1.0)
        return np.stack([arr, arr, arr], axis=-1)
    try:
        rgb = img.convert("RGB")
    except OSError as exc:
        raise CorruptFile(f"{path}: {exc}") from None
    return np.asarray(rgb, dtype=np.float64) / 255.0


# ---------------------------------------------------------------------------
# task manifests


@dataclass
class TaskInstance:
    """One benchmark question: images, prompt, options, optional answer key."""

    id: str
    kind: str
    images: list[str]
    question: str
    options: dict[str, object]
    answer: str | None = None
    tool_images: list[str] = field(default_factory=list)
    p2_paths: list[str] = field(default_factory=list)


def read_task_set(path, max_bytes: int = MAX_FILE_BYTES) -> list[TaskInstance]:
    """Read a JSONL manifest; relative paths are resolved against it."""
    base = Path(path).parent
    data = _read_bytes(path, max_bytes)
    tasks = []
    for line_no, line in enumerate(data.decode("utf-8", errors="replace").splitlines(), 1):
        if not line.strip():
            continue
        ptr = f"/line{line_no}"
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"{path}:{line_no}: not valid JSON: {exc.msg}", ptr) from None
        _expect(isinstance(doc, dict), "task must be an object", ptr)
        task_id = doc.get("id")
        _expect(isinstance(task_id, str) and task_id != "", "id must be a non-empty string",
                f"{ptr}/id")
        kind = doc.get("kind")
        _expect(kind in TASK_KINDS, f"unknown task kind {kind!r}", f"{ptr}/kind")
        question = doc.get("question")
        _expect(isinstance(question, str), "question must be a string", f"{ptr}/question")
        options = doc.get("options")
        _expect(isinstance(options, dict) and options, "options must be a non-empty object",
                f"{ptr}/options")
        answer = doc.get("answer")
        if answer is not None:
            _expect(answer in options, f"answer {answer!r} not among options", f"{ptr}/answer")

        def paths_of(key):
            raw = doc.get(key, [])
            _expect(isinstance(raw, list) and all(isinstance(p, str) for p in raw),
                    f"{key} must be a list of paths", f"{ptr}/{key}")
            return [os.path.normpath(str(base / p)) if not os.path.isabs(p) else p for p in raw]

        tasks.append(TaskInstance(
            id=task_id,
            kind=kind,
            images=paths_of("images"),
            question=question,
            options=options,
            answer=answer,
            tool_images=paths_of("tool_images"),
            p2_paths=paths_of("p2"),
        ))
    return tasks
