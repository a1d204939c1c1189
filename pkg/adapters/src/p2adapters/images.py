"""Shared image loading for the adapters."""

from __future__ import annotations

import numpy as np
from PIL import Image


def load_rgb(path) -> np.ndarray:
    """(H, W, 3) uint8."""
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))


def load_gray(path) -> np.ndarray:
    """(H, W) uint8 luma."""
    with Image.open(path) as img:
        return np.asarray(img.convert("L"))


def dims_of(arr: np.ndarray) -> tuple[int, int]:
    return (arr.shape[1], arr.shape[0])  # (W, H)
