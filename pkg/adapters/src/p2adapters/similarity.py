"""Point-feature similarity export for semantic correspondence.

For one source point and N target candidate points, emit a candidates
JSON with labels A, B, C, ... in input order. The ``patch`` backend
compares local descriptors (normalized grayscale patch concatenated with
a gradient-orientation histogram) by cosine similarity; the ``neural``
backend is reserved for a pretrained diffusion-feature extractor. The
consumer treats any monotone score the same way, so the argmax candidate
is what matters.
"""

from __future__ import annotations

import string

import cv2
import numpy as np

from .errors import ExportValidationFailure, ModelLoadFailure
from .images import dims_of, load_gray
from .io_formats import finish_manifest, write_candidates_json

PATCH_RADIUS = 12
ORIENT_BINS = 12


def _descriptor(gray: np.ndarray, x: int, y: int) -> np.ndarray:
    h, w = gray.shape
    pad = PATCH_RADIUS
    padded = cv2.copyMakeBorder(gray, pad, pad, pad, pad, cv2.BORDER_REFLECT)
    patch = padded[y:y + 2 * pad + 1, x:x + 2 * pad + 1].astype(np.float32)
    patch = (patch - patch.mean()) / (patch.std() + 1e-6)

    gx = cv2.Sobel(patch, cv2.CV_32F, 1, 0)
    gy = cv2.Sobel(patch, cv2.CV_32F, 0, 1)
    mag = np.hypot(gx, gy).ravel()
    ang = (np.arctan2(gy, gx).ravel() + np.pi) / (2 * np.pi)  # [0, 1]
    hist = np.zeros(ORIENT_BINS, np.float32)
    bins = np.minimum((ang * ORIENT_BINS).astype(int), ORIENT_BINS - 1)
    np.add.at(hist, bins, mag)
    hist /= hist.sum() + 1e-6
    return np.concatenate([patch.ravel() / patch.size, hist])


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    denom = float(np.linalg.norm(a) * np.linalg.norm(b))
    return float(a @ b) / denom if denom > 0 else 0.0


def _neural_similarities(*args):
    try:
        import diffusers  # noqa: F401
    except ImportError as exc:
        raise ModelLoadFailure(f"diffusion-feature stack unavailable: {exc}") from None
    raise ModelLoadFailure("diffusion-feature weights not configured in this environment")


def export_similarities(source_path, source_point, target_path, candidate_points,
                        output, backend: str = "patch", manifest_out=None):
    """Write a candidates JSON scoring each target point; returns the manifest."""
    if not candidate_points:
        raise ExportValidationFailure("no candidate points given")
    if len(candidate_points) > 26:
        raise ExportValidationFailure("more candidates than labels A-Z")
    if backend == "neural":
        scores = _neural_similarities(source_path, source_point, target_path,
                                      candidate_points)
        version = "dift-diffusers"
    elif backend == "patch":
        source = load_gray(source_path)
        target = load_gray(target_path)
        anchor = _descriptor(source, int(source_point[0]), int(source_point[1]))
        scores = [_cosine(anchor, _descriptor(target, int(x), int(y)))
                  for x, y in candidate_points]
        version = "patch-cosine-1"
    else:
        raise ValueError(f"unknown similarity backend {backend!r}")

    target_dims = dims_of(load_gray(target_path))
    candidates = [
        (string.ascii_uppercase[i], (int(x), int(y)), float(score))
        for i, ((x, y), score) in enumerate(zip(candidate_points, scores))
    ]
    for _, (x, y), _ in candidates:
        if not (0 <= x < target_dims[0] and 0 <= y < target_dims[1]):
            raise ExportValidationFailure(f"candidate point ({x},{y}) outside target image")
    write_candidates_json(target_dims, candidates, output)
    return finish_manifest("similarity", version, [source_path, target_path], output,
                           "candidates-json", manifest_out, backend=backend)
