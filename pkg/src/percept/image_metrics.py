"""Strip similarity primitives for the jigsaw compiler.

A strip is a numpy float array with values in [0, 1]: shape (H, W) for a
single luma channel, (H, W, 3) for RGB. All metrics are symmetric and are
mapped into [0, 1] before they are averaged, so the composite readout is a
unit-range score regardless of each metric's native range.

Pinned parameterization: SSIM uses a uniform 7x7 window (whole strip when
smaller) with C1=(0.01)^2, C2=(0.03)^2 on unit dynamic range; the edge
metric is zero-mean NCC of central-difference gradient magnitudes with a
0.5 fallback for zero-variance fields; the color metric is a symmetric
chi-square over a 16x8x8 HSV histogram, mapped via 1/(1+chi2).
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeMismatch

SSIM_WINDOW = 7
SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2
HSV_BINS = (16, 8, 8)
CHI2_EPS = 1e-10

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


def luma(rgb: np.ndarray) -> np.ndarray:
    """Rec. 601 luma of an (H, W, 3) array, clipped to [0, 1]."""
    return np.clip(rgb @ LUMA_WEIGHTS, 0.0, 1.0)


def _check_pair(a: np.ndarray, b: np.ndarray, ndim: int, what: str):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatch(f"{what}: shapes {a.shape} vs {b.shape}")
    if a.ndim != ndim or (ndim == 3 and a.shape[-1] != 3):
        raise ShapeMismatch(f"{what}: expected {ndim}-d strip, got shape {a.shape}")
    if a.size == 0:
        raise ShapeMismatch(f"{what}: empty strip")
    for arr in (a, b):
        if not np.isfinite(arr).all():
            raise ShapeMismatch(f"{what}: non-finite sample")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ShapeMismatch(f"{what}: samples outside [0, 1]")
    return a, b


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean local SSIM of two luma strips, mapped from [-1, 1] to [0, 1]."""
    a, b = _check_pair(a, b, 2, "ssim")
    h, w = a.shape
    if h < SSIM_WINDOW or w < SSIM_WINDOW:
        s = _ssim_stats(a[None, None], b[None, None])
    else:
        shape = (SSIM_WINDOW, SSIM_WINDOW)
        wa = np.lib.stride_tricks.sliding_window_view(a, shape)
        wb = np.lib.stride_tricks.sliding_window_view(b, shape)
        s = _ssim_stats(wa, wb)
    return (float(s) + 1.0) / 2.0


def _ssim_stats(wa: np.ndarray, wb: np.ndarray) -> float:
    # wa/wb: (..., win_h, win_w) windows; population moments per window
    mu_a = wa.mean(axis=(-1, -2))
    mu_b = wb.mean(axis=(-1, -2))
    var_a = (wa * wa).mean(axis=(-1, -2)) - mu_a * mu_a
    var_b = (wb * wb).mean(axis=(-1, -2)) - mu_b * mu_b
    cov = (wa * wb).mean(axis=(-1, -2)) - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + SSIM_C1) * (2.0 * cov + SSIM_C2)
    den = (mu_a * mu_a + mu_b * mu_b + SSIM_C1) * (var_a + var_b + SSIM_C2)
    return float(np.mean(num / den))


def _gradient_magnitude(a: np.ndarray) -> np.ndarray:
    # central differences; a size-1 axis contributes zero gradient
    gy = np.gradient(a, axis=0) if a.shape[0] > 1 else np.zeros_like(a)
    gx = np.gradient(a, axis=1) if a.shape[1] > 1 else np.zeros_like(a)
    return np.hypot(gx, gy)


def gradient_ncc(a: np.ndarray, b: np.ndarray) -> float:
    """Zero-mean NCC between gradient-magnitude fields, mapped to [0, 1].

    Returns 0.5 (the neutral value) when either field has zero variance,
    where correlation is undefined.
    """
    a, b = _check_pair(a, b, 2, "gradient_ncc")
    ga = _gradient_magnitude(a).ravel()
    gb = _gradient_magnitude(b).ravel()
    da = ga - ga.mean()
    db = gb - gb.mean()
    va = float(da @ da)
    vb = float(db @ db)
    if va == 0.0 or vb == 0.0:
        return 0.5
    ncc = float(da @ db) / (np.sqrt(va) * np.sqrt(vb))
    return float(np.clip((ncc + 1.0) / 2.0, 0.0, 1.0))


def rgb_to_hsv(rgb: np.ndarray) -> np.ndarray:
    """Vectorized RGB -> HSV on [0, 1]^3 (hue as a fraction of the circle)."""
    rgb = np.asarray(rgb, dtype=np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    maxc = rgb.max(axis=-1)
    minc = rgb.min(axis=-1)
    delta = maxc - minc
    safe_delta = np.where(delta == 0.0, 1.0, delta)

    h = np.zeros_like(maxc)
    is_r = (maxc == r) & (delta > 0)
    is_g = (maxc == g) & (delta > 0) & ~is_r
    is_b = (delta > 0) & ~is_r & ~is_g
    h = np.where(is_r, ((g - b) / safe_delta) % 6.0, h)
    h = np.where(is_g, (b - r) / safe_delta + 2.0, h)
    h = np.where(is_b, (r - g) / safe_delta + 4.0, h)
    h = h / 6.0

    s = np.where(maxc > 0.0, delta / np.where(maxc == 0.0, 1.0, maxc), 0.0)
    return np.stack([h, s, maxc], axis=-1)


def hsv_chi2_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric chi-square similarity between HSV histograms of RGB strips."""
    a, b = _check_pair(a, b, 3, "hsv_chi2_similarity")
    ha = _hsv_histogram(a)
    hb = _hsv_histogram(b)
    chi2 = float(np.sum((ha - hb) ** 2 / (ha + hb + CHI2_EPS)))
    return 1.0 / (1.0 + chi2)


def _hsv_histogram(rgb: np.ndarray) -> np.ndarray:
    hsv = rgb_to_hsv(rgb).reshape(-1, 3)
    hist, _ = np.histogramdd(hsv, bins=HSV_BINS, range=[(0, 1), (0, 1), (0, 1)])
    return hist.ravel() / hist.sum()


def composite_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Mean of structural, edge, and color similarity between two RGB strips."""
    a, b = _check_pair(a, b, 3, "composite_similarity")
    la, lb = luma(a), luma(b)
    parts = (ssim(la, lb), gradient_ncc(la, lb), hsv_chi2_similarity(a, b))
    return float(np.clip(sum(parts) / 3.0, 0.0, 1.0))
