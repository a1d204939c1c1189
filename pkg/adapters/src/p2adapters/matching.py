"""Keypoint correspondence export between an image pair.

``klt`` tracks Shi-Tomasi corners with pyramidal Lucas-Kanade, a fully
classical sparse matcher; ``neural`` is reserved for a pretrained dense
matcher and reports ModelLoadFailure when that stack is not installed.
Output is the matches JSON schema with every point clamped in bounds.
"""

from __future__ import annotations

import cv2
import numpy as np

from .errors import ExportValidationFailure, ModelLoadFailure
from .images import dims_of, load_gray
from .io_formats import finish_manifest, write_matches_json

MAX_CORNERS = 200


def _klt_matches(first: np.ndarray, second: np.ndarray) -> list:
    corners = cv2.goodFeaturesToTrack(first, maxCorners=MAX_CORNERS,
                                      qualityLevel=0.01, minDistance=8)
    if corners is None or len(corners) == 0:
        raise ExportValidationFailure("no trackable corners in the first image")
    tracked, status, _ = cv2.calcOpticalFlowPyrLK(first, second, corners, None)
    matches = []
    h2, w2 = second.shape
    h1, w1 = first.shape
    for (x1, y1), (x2, y2), ok in zip(corners[:, 0], tracked[:, 0], status.ravel()):
        if not ok:
            continue
        if not (0 <= x2 < w2 and 0 <= y2 < h2):
            continue
        matches.append((
            (int(np.clip(round(x1), 0, w1 - 1)), int(np.clip(round(y1), 0, h1 - 1))),
            (int(np.clip(round(x2), 0, w2 - 1)), int(np.clip(round(y2), 0, h2 - 1))),
        ))
    if not matches:
        raise ExportValidationFailure("tracking lost every corner")
    return matches


def _neural_matches(first_path, second_path):
    try:
        import kornia  # noqa: F401
    except ImportError as exc:
        raise ModelLoadFailure(f"pretrained matcher stack unavailable: {exc}") from None
    raise ModelLoadFailure("pretrained matcher weights not configured in this environment")


def export_matches(first_path, second_path, output, backend: str = "klt",
                   manifest_out=None):
    """Write a matches JSON for an image pair; returns the export manifest."""
    first = load_gray(first_path)
    second = load_gray(second_path)
    if backend == "neural":
        matches = _neural_matches(first_path, second_path)
        version = "loftr-kornia"
    elif backend == "klt":
        matches = _klt_matches(first, second)
        version = f"klt-opencv-{cv2.__version__}"
    else:
        raise ValueError(f"unknown matching backend {backend!r}")
    write_matches_json(dims_of(first), dims_of(second), matches, output)
    return finish_manifest("matching", version, [first_path, second_path], output,
                           "matches-json", manifest_out, backend=backend,
                           count=len(matches))
