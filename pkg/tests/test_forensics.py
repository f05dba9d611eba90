import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from skimage.metrics import structural_similarity

from fakepolisher.errors import DimensionError, ParameterError
from fakepolisher.forensics import (SimilarityReport, blob_energy_ratio, build_toy_example, coss,
                                    histogram, histogram_peaks, psnr, similarity, spectrum,
                                    spectrum_png_array, ssim)
from fakepolisher.imaging import to_grayscale
from fakepolisher.synth import generate_clean_corpus


def skimage_ssim(a, b):
    ga, gb = to_grayscale(a)[:, :, 0], to_grayscale(b)[:, :, 0]
    return structural_similarity(ga, gb, data_range=1.0, gaussian_weights=True, sigma=1.5,
                                 use_sample_covariance=False, win_size=11)


def test_blob_ratio_constant_image_is_zero():
    assert spectrum(np.full((32, 32), 0.4)).blob_energy_ratio == 0.0


def test_blob_ratio_quarter_cosine():
    y, x = np.mgrid[0:32, 0:32]
    img = 0.5 + 0.25 * np.cos(2 * np.pi * x / 4) * np.cos(2 * np.pi * y / 4)
    assert spectrum(img).blob_energy_ratio >= 0.9


def test_blob_ratio_bounds_and_sites():
    power = np.zeros((16, 16))
    power[4, 4] = 3.0
    power[1, 8] = 1.0
    assert blob_energy_ratio(power) == pytest.approx(0.75)
    power[0, 1] = 100.0  # inside the DC window: ignored
    assert blob_energy_ratio(power) == pytest.approx(0.75)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 1000), shift=st.floats(0.0, 0.5))
def test_blob_ratio_invariant_to_constant_offset(seed, shift):
    img = np.random.default_rng(seed).random((16, 16)) * 0.5
    assert spectrum(img + shift).blob_energy_ratio == pytest.approx(spectrum(img).blob_energy_ratio, abs=1e-8)


def test_parseval(rng):
    img = rng.random((24, 20))
    F = np.fft.fft2(img)
    assert np.sum(np.abs(F) ** 2) == pytest.approx(img.size * np.sum(img ** 2), rel=1e-6)


def test_spectrum_log_magnitude_centered():
    rep = spectrum(np.full((8, 8), 0.5))
    assert rep.log_magnitude.shape == (8, 8)
    assert np.argmax(rep.log_magnitude) == 4 * 8 + 4
    assert rep.log_magnitude[4, 4] == pytest.approx(math.log1p(32.0))
    png = spectrum_png_array(spectrum(np.random.default_rng(0).random((8, 8))))
    assert png.min() == 0.0 and png.max() == 1.0 and png.shape == (8, 8, 1)


def test_histogram_examples():
    h = histogram(np.full((4, 6), 0.5))
    assert h[128] == 24 and h.sum() == 24
    assert histogram(np.ones((2, 2)))[-1] == 4
    cb = np.kron(np.array([[0.2, 0.8], [0.8, 0.2]]), np.ones((3, 3)))
    h = histogram(cb)
    assert np.count_nonzero(h) == 2 and h[51] == h[204] == 18
    with pytest.raises(ParameterError):
        histogram(cb, bins=1)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 1000), bins=st.integers(2, 300))
def test_histogram_counts_sum(seed, bins):
    img = np.random.default_rng(seed).random((7, 9, 3))
    assert histogram(img, bins).sum() == 63


def test_histogram_peaks_plateau_and_edges():
    assert histogram_peaks(np.array([5, 0, 0, 2, 2, 0, 7])).tolist() == [0, 3, 6]


def test_psnr_values():
    assert psnr(np.zeros((1, 1)), np.full((1, 1), 0.5)) == pytest.approx(6.0206, abs=1e-3)
    assert math.isinf(psnr(np.zeros((3, 3)), np.zeros((3, 3))))
    with pytest.raises(DimensionError):
        psnr(np.zeros((3, 3)), np.zeros((3, 4)))


def test_psnr_decreases_with_noise(rng):
    img = np.full((16, 16), 0.5)
    noise = rng.standard_normal((16, 16))
    values = [psnr(img, np.clip(img + a * noise, 0, 1)) for a in (0.01, 0.05, 0.2)]
    assert values[0] > values[1] > values[2]


def test_coss_examples():
    assert coss(np.full((3, 3), 0.2), np.full((3, 3), 0.9)) == pytest.approx(1.0)
    assert coss(np.array([[1.0, 0.0]]), np.array([[1.0, 1.0]])) == pytest.approx(1 / math.sqrt(2))
    img = np.random.default_rng(1).random((5, 5))
    assert coss(img, img) == 1.0
    with pytest.raises(ParameterError):
        coss(np.zeros((2, 2)), np.ones((2, 2)))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), channels=st.sampled_from([1, 3]))
def test_metric_symmetry_and_ranges(seed, channels):
    rng = np.random.default_rng(seed)
    a, b = rng.random((16, 14, channels)), rng.random((16, 14, channels))
    assert abs(coss(a, b) - coss(b, a)) <= 1e-12
    assert abs(ssim(a, b) - ssim(b, a)) <= 1e-12
    assert 0.0 <= coss(a, b) <= 1.0
    assert -1.0 <= ssim(a, b) <= 1.0


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), channels=st.sampled_from([1, 3]), noise=st.floats(0.0, 0.5))
def test_ssim_matches_reference(seed, channels, noise):
    rng = np.random.default_rng(seed)
    a = rng.random((20, 24, channels))
    b = np.clip(a + noise * rng.standard_normal(a.shape), 0, 1)
    assert ssim(a, b) == pytest.approx(skimage_ssim(a, b), abs=1e-9)


def test_ssim_identity_and_inversion():
    img = generate_clean_corpus(1, 32, 1, 4)[0]
    assert ssim(img, img) == 1.0
    texture = (np.indices((32, 32)).sum(axis=0) % 2).astype(float)[:, :, None] * 0.8 + 0.1
    assert ssim(texture, 1.0 - texture) < 0.5
    assert skimage_ssim(texture, 1.0 - texture) < 0.5
    with pytest.raises(ParameterError):
        ssim(np.zeros((10, 10)), np.zeros((10, 10)))


def test_similarity_report_json():
    img = np.random.default_rng(2).random((12, 12))
    rep = similarity(img, img)
    assert rep.identical
    d = rep.to_dict()
    assert d == {"coss": 1.0, "psnr_db": "inf", "ssim": 1.0}
    json.dumps(d)
    other = SimilarityReport(0.9, 30.0, 0.8)
    assert not other.identical and other.to_dict()["psnr_db"] == 30.0


def test_toy_example():
    toy = build_toy_example()
    assert toy.toy.shape == (64, 64, 3)
    order = np.argsort(toy.hist_toy)[::-1]
    white_bin = int(1.0 * 255)
    orange_bin = int(np.floor(to_grayscale(np.array([[[1.0, 0.647, 0.0]]]))[0, 0, 0] * 256))
    assert sorted(order[:2].tolist()) == sorted([orange_bin, white_bin])
    assert toy.hist_toy[order[0]] == toy.hist_toy[order[1]] == 2048
    peaks = histogram_peaks(toy.hist_blurred)
    assert len(peaks) >= 2
    # colour swap equals a one-cell shift, so the blurred histogram mirrors about the tone midpoint
    mid = (white_bin + orange_bin) / 2
    mirrored = sorted(2 * mid - p for p in peaks)
    assert np.max(np.abs(np.sort(peaks) - np.array(mirrored))) <= 1.0
    assert toy.report_blurred.blob_energy_ratio >= 0.3 * toy.report_toy.blob_energy_ratio
