"""Optical flow export between an image pair.

``farneback`` runs dense classical flow (no weights needed); ``neural``
wraps torchvision's pretrained recurrent flow network when its weights
are available locally. Output is Middlebury .flo.
"""

from __future__ import annotations

import cv2
import numpy as np

from .errors import ExportValidationFailure, ModelLoadFailure
from .images import load_gray
from .io_formats import finish_manifest, write_flo


def _farneback(first: np.ndarray, second: np.ndarray) -> np.ndarray:
    return cv2.calcOpticalFlowFarneback(first, second, None,
                                        0.5, 3, 15, 3, 5, 1.2, 0)


def _neural_flow(first_path, second_path) -> np.ndarray:
    try:
        import torch
        from torchvision.io import read_image
        from torchvision.models.optical_flow import Raft_Small_Weights, raft_small
    except ImportError as exc:
        raise ModelLoadFailure(f"torchvision unavailable: {exc}") from None
    try:
        weights = Raft_Small_Weights.DEFAULT
        model = raft_small(weights=weights).eval()
        transform = weights.transforms()
        a = read_image(str(first_path))[None]
        b = read_image(str(second_path))[None]
        a, b = transform(a, b)
        with torch.no_grad():
            flow = model(a, b)[-1][0]
    except Exception as exc:
        raise ModelLoadFailure(f"cannot run pretrained flow model: {exc}") from None
    return flow.permute(1, 2, 0).numpy()


def export_flow(first_path, second_path, output, backend: str = "farneback",
                manifest_out=None):
    """Write a .flo field for an image pair; returns the export manifest."""
    if backend == "neural":
        uv = _neural_flow(first_path, second_path)
        version = "raft-small-torchvision"
    elif backend == "farneback":
        first = load_gray(first_path)
        second = load_gray(second_path)
        if first.shape != second.shape:
            raise ExportValidationFailure(
                f"image pair shapes differ: {first.shape} vs {second.shape}")
        uv = _farneback(first, second)
        version = f"farneback-opencv-{cv2.__version__}"
    else:
        raise ValueError(f"unknown flow backend {backend!r}")
    write_flo(uv[..., 0], uv[..., 1], output)
    return finish_manifest("flow", version, [first_path, second_path], output,
                           "flo", manifest_out, backend=backend)
