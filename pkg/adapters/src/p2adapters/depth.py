"""Monocular depth export.

The ``neural`` backend wraps a pretrained monocular estimator loaded via
transformers (requires downloaded weights); ``proxy`` is a deterministic
classical stand-in (blurred luminance with a vertical prior) used for
format/contract testing when no checkpoint is available. Either way the
output is an NPY float32 (H, W) map that the consumer min-max normalizes,
so only relative structure matters.
"""

from __future__ import annotations

import cv2
import numpy as np

from .errors import ModelLoadFailure
from .images import load_gray
from .io_formats import finish_manifest, write_depth_npy

PROXY_VERSION = "proxy-1"


def _proxy_depth(gray: np.ndarray) -> np.ndarray:
    h, w = gray.shape
    smooth = cv2.GaussianBlur(gray.astype(np.float32) / 255.0, (0, 0), max(1.0, w / 64))
    # mild bottom-of-frame-is-near prior, common in ground-plane scenes
    prior = np.linspace(0.0, 0.35, h, dtype=np.float32)[:, None]
    return smooth + prior


def _neural_depth(image_path) -> np.ndarray:
    try:
        from transformers import pipeline
    except ImportError as exc:
        raise ModelLoadFailure(f"transformers unavailable: {exc}") from None
    try:
        estimator = pipeline("depth-estimation", model="LiheYoung/depth-anything-small-hf")
        result = estimator(str(image_path))
    except Exception as exc:
        raise ModelLoadFailure(f"cannot load depth checkpoint: {exc}") from None
    return np.asarray(result["predicted_depth"], dtype=np.float32)


def export_depth(image_path, output, backend: str = "proxy", manifest_out=None):
    """Write an NPY depth map for one image; returns the export manifest."""
    if backend == "neural":
        depth = _neural_depth(image_path)
        version = "depth-anything-small"
    elif backend == "proxy":
        depth = _proxy_depth(load_gray(image_path))
        version = PROXY_VERSION
    else:
        raise ValueError(f"unknown depth backend {backend!r}")
    write_depth_npy(depth, output)
    return finish_manifest("depth", version, [image_path], output, "npy",
                           manifest_out, backend=backend)
