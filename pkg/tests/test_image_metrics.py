"""Strip similarity metrics: pinned values, symmetry, range guarantees."""

import numpy as np
import pytest

from percept.image_metrics import (
    SSIM_C1,
    composite_similarity,
    gradient_ncc,
    hsv_chi2_similarity,
    luma,
    rgb_to_hsv,
    ssim,
)
from percept.errors import ShapeMismatch


def _rand_luma(rng, h=12, w=20):
    return rng.random((h, w))


def _rand_rgb(rng, h=12, w=20):
    return rng.random((h, w, 3))


class TestSsim:
    def test_identical_is_exactly_one(self, nprng):
        a = _rand_luma(nprng)
        assert ssim(a, a.copy()) == 1.0

    def test_flat_black_vs_flat_white(self):
        # zero-variance strips: raw value is C1/(1+C1), mapped to ~0.5
        a = np.zeros((10, 10))
        b = np.ones((10, 10))
        expected_raw = SSIM_C1 / (1.0 + SSIM_C1)
        assert ssim(a, b) == pytest.approx((expected_raw + 1.0) / 2.0, abs=1e-12)
        assert expected_raw == pytest.approx(9.999e-5, rel=1e-3)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            ssim(np.zeros((4, 4)), np.zeros((4, 5)))

    def test_small_strip_uses_full_window(self):
        # below the 7x7 window everything collapses to one global window
        a = np.linspace(0, 1, 12).reshape(3, 4)
        assert ssim(a, a.copy()) == 1.0

    def test_symmetric(self, nprng):
        for _ in range(20):
            a, b = _rand_luma(nprng), _rand_luma(nprng)
            assert ssim(a, b) == ssim(b, a)

    def test_range(self, nprng):
        for _ in range(50):
            value = ssim(_rand_luma(nprng), _rand_luma(nprng))
            assert 0.0 <= value <= 1.0


class TestGradientNcc:
    def test_identical_nonconstant(self, nprng):
        a = _rand_luma(nprng)
        assert gradient_ncc(a, a.copy()) == pytest.approx(1.0, abs=1e-12)

    def test_anticorrelated_gradients(self):
        # columns 0,1,0,1 give edge magnitudes [1,0,0,1]; columns 0,0,1,1
        # give [0,.5,.5,0] = affine negative of the first -> NCC exactly -1
        a = np.tile(np.array([0.0, 1.0, 0.0, 1.0]), (4, 1))
        b = np.tile(np.array([0.0, 0.0, 1.0, 1.0]), (4, 1))
        assert gradient_ncc(a, b) == pytest.approx(0.0, abs=1e-12)

    def test_constant_falls_back_to_neutral(self, nprng):
        a = np.full((8, 8), 0.3)
        b = _rand_luma(nprng, 8, 8)
        assert gradient_ncc(a, b) == 0.5
        assert gradient_ncc(b, a) == 0.5

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            gradient_ncc(np.zeros((4, 4)), np.zeros((5, 4)))

    def test_symmetric(self, nprng):
        for _ in range(20):
            a, b = _rand_luma(nprng), _rand_luma(nprng)
            assert gradient_ncc(a, b) == gradient_ncc(b, a)


class TestHsvChi2:
    def test_identical(self, nprng):
        a = _rand_rgb(nprng)
        assert hsv_chi2_similarity(a, a.copy()) == 1.0

    def test_disjoint_single_bins(self):
        # uniform red vs uniform green: all mass in two different bins,
        # chi2 = 2, similarity = 1/3
        red = np.zeros((6, 6, 3))
        red[..., 0] = 1.0
        green = np.zeros((6, 6, 3))
        green[..., 1] = 1.0
        assert hsv_chi2_similarity(red, green) == pytest.approx(1.0 / 3.0, abs=1e-9)

    def test_strictly_below_one_when_histograms_differ(self, nprng):
        a = np.zeros((6, 6, 3))
        b = np.zeros((6, 6, 3))
        b[0, 0] = (1.0, 0.0, 0.0)
        assert hsv_chi2_similarity(a, b) < 1.0

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            hsv_chi2_similarity(np.zeros((4, 4, 3)), np.zeros((4, 5, 3)))

    def test_symmetric(self, nprng):
        for _ in range(20):
            a, b = _rand_rgb(nprng), _rand_rgb(nprng)
            assert hsv_chi2_similarity(a, b) == hsv_chi2_similarity(b, a)


class TestRgbToHsv:
    def test_matches_colorsys(self, nprng):
        import colorsys

        arr = _rand_rgb(nprng, 4, 5)
        got = rgb_to_hsv(arr)
        for i in range(4):
            for j in range(5):
                expected = colorsys.rgb_to_hsv(*arr[i, j])
                assert got[i, j] == pytest.approx(expected, abs=1e-12)

    def test_luma_weights(self):
        white = np.ones((1, 1, 3))
        assert luma(white)[0, 0] == pytest.approx(1.0, abs=1e-12)
        red = np.zeros((1, 1, 3))
        red[..., 0] = 1.0
        assert luma(red)[0, 0] == pytest.approx(0.299, abs=1e-12)


class TestComposite:
    def test_identical_is_one(self, nprng):
        a = _rand_rgb(nprng)
        assert composite_similarity(a, a.copy()) == pytest.approx(1.0, abs=1e-12)

    def test_mean_of_components(self, nprng):
        a, b = _rand_rgb(nprng), _rand_rgb(nprng)
        la, lb = luma(a), luma(b)
        expected = (ssim(la, lb) + gradient_ncc(la, lb) + hsv_chi2_similarity(a, b)) / 3.0
        assert composite_similarity(a, b) == pytest.approx(expected, abs=1e-15)

    def test_black_vs_white(self):
        # ssim term ~0.5, ncc fallback 0.5, hsv term computed independently
        black = np.zeros((10, 10, 3))
        white = np.ones((10, 10, 3))
        hsv_term = hsv_chi2_similarity(black, white)
        ssim_term = (SSIM_C1 / (1.0 + SSIM_C1) + 1.0) / 2.0
        expected = (ssim_term + 0.5 + hsv_term) / 3.0
        assert composite_similarity(black, white) == pytest.approx(expected, abs=1e-12)

    def test_range_and_symmetry(self, nprng):
        for _ in range(20):
            a, b = _rand_rgb(nprng), _rand_rgb(nprng)
            v = composite_similarity(a, b)
            assert 0.0 <= v <= 1.0
            assert v == composite_similarity(b, a)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            composite_similarity(np.zeros((4, 4, 3)), np.zeros((4, 4)))
