"""Object detection export.

``neural`` is reserved for a pretrained open-vocabulary detector;
``contour`` is a classical stand-in that proposes salient regions from
edge contours, attaches the queried label, and scores each box by its
relative saliency. It exists so that the export format and downstream
plumbing can be exercised without checkpoints; it is not a real detector.
"""

from __future__ import annotations

import cv2
import numpy as np

from .errors import ModelLoadFailure
from .images import dims_of, load_gray
from .io_formats import finish_manifest, write_detections_json

MIN_AREA_FRACTION = 0.001
MAX_BOXES = 10


def _contour_boxes(gray: np.ndarray) -> list[tuple[tuple[int, int, int, int], float]]:
    h, w = gray.shape
    edges = cv2.Canny(gray, 60, 160)
    edges = cv2.dilate(edges, np.ones((3, 3), np.uint8))
    contours, _ = cv2.findContours(edges, cv2.RETR_EXTERNAL, cv2.CHAIN_APPROX_SIMPLE)
    scored = []
    for contour in contours:
        x, y, bw, bh = cv2.boundingRect(contour)
        area = bw * bh
        if area < MIN_AREA_FRACTION * w * h:
            continue
        density = cv2.contourArea(contour) / area if area else 0.0
        scored.append(((x, y, min(x + bw, w - 1), min(y + bh, h - 1)),
                       float(np.clip(0.25 + 0.75 * density, 0.0, 1.0))))
    scored.sort(key=lambda entry: -entry[1])
    return scored[:MAX_BOXES]


def _neural_detections(image_path, label):
    try:
        import transformers  # noqa: F401
    except ImportError as exc:
        raise ModelLoadFailure(f"open-vocabulary detector stack unavailable: {exc}") from None
    raise ModelLoadFailure("open-vocabulary detector weights not configured in this environment")


def export_detections(image_path, label: str, output, backend: str = "contour",
                      manifest_out=None):
    """Write a detections JSON for one image/label query; returns the manifest."""
    if backend == "neural":
        detections = _neural_detections(image_path, label)
        version = "open-vocab-detector"
    elif backend == "contour":
        gray = load_gray(image_path)
        detections = [(label, score, box) for box, score in _contour_boxes(gray)]
        version = f"contour-opencv-{cv2.__version__}"
    else:
        raise ValueError(f"unknown detection backend {backend!r}")
    write_detections_json(dims_of(load_gray(image_path)), detections, output)
    return finish_manifest("detection", version, [image_path], output,
                           "detections-json", manifest_out, backend=backend,
                           label=label, count=len(detections))
