"""Spectral artifact scoring, gray-level histograms and image similarity metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage, signal

from .errors import DimensionError, ParameterError
from .imaging import as_image, gaussian_blur, to_grayscale
from .synth import ORANGE, WHITE, make_checkerboard, resize_nearest

BLOB_SITES = ((0.25, 0.25), (0.25, 0.75), (0.75, 0.25), (0.75, 0.75))

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1, SSIM_K2 = 0.01, 0.03


@dataclass(frozen=True)
class SpectrumReport:
    log_magnitude: np.ndarray  # DC-centred log(1 + |F|)
    blob_energy_ratio: float
    blob_locations: tuple = BLOB_SITES

    def to_dict(self) -> dict:
        return {"blob_energy_ratio": self.blob_energy_ratio,
                "blob_sites": [list(site) for site in self.blob_locations]}


@dataclass(frozen=True)
class SimilarityReport:
    coss: float
    psnr: float  # math.inf for identical inputs
    ssim: float

    @property
    def identical(self) -> bool:
        return math.isinf(self.psnr)

    def to_dict(self) -> dict:
        return {"coss": self.coss, "psnr_db": "inf" if self.identical else self.psnr, "ssim": self.ssim}


def _gray2d(image) -> np.ndarray:
    return to_grayscale(as_image(image))[:, :, 0]


def _window_mask(shape, sites) -> np.ndarray:
    h, w = shape
    mask = np.zeros(shape, dtype=bool)
    for r, c in sites:
        rows = np.arange(r - 1, r + 2) % h
        cols = np.arange(c - 1, c + 2) % w
        mask[np.ix_(rows, cols)] = True
    return mask


def blob_energy_ratio(power: np.ndarray) -> float:
    """Share of non-DC spectral power inside 3x3 windows at the quarter-frequency sites.

    ``power`` is ``|F|^2`` of an unshifted 2-D DFT.
    """
    h, w = power.shape
    dc = _window_mask(power.shape, [(0, 0)])
    sites = [(int(round(fr * h)), int(round(fc * w))) for fr, fc in BLOB_SITES]
    blob = _window_mask(power.shape, sites) & ~dc
    denom = float(power[~dc].sum())
    if denom <= 0.0:
        return 0.0
    return min(1.0, float(power[blob].sum()) / denom)


def spectrum(image) -> SpectrumReport:
    gray = _gray2d(image)
    F = np.fft.fft2(gray)
    power = np.abs(F) ** 2
    log_mag = np.fft.fftshift(np.log1p(np.abs(F)))
    return SpectrumReport(log_mag, blob_energy_ratio(power))


def spectrum_png_array(report: SpectrumReport) -> np.ndarray:
    """Min-max normalized log-magnitude as a single-channel image."""
    lm = report.log_magnitude
    lo, hi = lm.min(), lm.max()
    scaled = (lm - lo) / (hi - lo) if hi > lo else np.zeros_like(lm)
    return scaled[:, :, None]


def histogram(image, bins: int = 256) -> np.ndarray:
    """Counts of grayscale values over ``bins`` equal bins of ``[0, 1]``; the last bin is closed."""
    if bins < 2:
        raise ParameterError(f"bins must be >= 2, got {bins}")
    gray = _gray2d(image).ravel()
    idx = np.minimum(np.floor(gray * bins).astype(np.intp), bins - 1)
    return np.bincount(idx, minlength=bins)


def histogram_peaks(counts) -> np.ndarray:
    """Indices of local maxima of a histogram (plateaus count once)."""
    padded = np.concatenate([[0], np.asarray(counts), [0]])
    peaks, _ = signal.find_peaks(padded)
    return peaks - 1


def _same_shape(a, b) -> tuple[np.ndarray, np.ndarray]:
    a, b = as_image(a), as_image(b)
    if a.shape != b.shape:
        raise DimensionError(f"image shapes differ: {a.shape} vs {b.shape}")
    return a, b


def coss(a, b) -> float:
    """Cosine similarity of the vectorized images."""
    a, b = _same_shape(a, b)
    va, vb = a.ravel(), b.ravel()
    na, nb = np.linalg.norm(va), np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        raise ParameterError("cosine similarity is undefined for an all-zero image")
    if np.array_equal(va, vb):
        return 1.0
    return float(np.clip(np.dot(va, vb) / (na * nb), -1.0, 1.0))


def psnr(a, b) -> float:
    """Peak signal-to-noise ratio in dB with peak 1.0; ``inf`` for identical images."""
    a, b = _same_shape(a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def _ssim_window() -> np.ndarray:
    r = SSIM_WINDOW // 2
    x = np.arange(-r, r + 1, dtype=np.float64)
    g = np.exp(-(x * x) / (2.0 * SSIM_SIGMA ** 2))
    return g / g.sum()


def _filter_valid(img: np.ndarray, g: np.ndarray) -> np.ndarray:
    r = len(g) // 2
    out = ndimage.correlate1d(img, g, axis=0, mode="constant")
    out = ndimage.correlate1d(out, g, axis=1, mode="constant")
    return out[r:img.shape[0] - r, r:img.shape[1] - r]


def ssim(a, b) -> float:
    """Mean SSIM on grayscale with an 11x11 Gaussian window (sigma 1.5), valid region only."""
    a, b = _same_shape(a, b)
    if min(a.shape[:2]) < SSIM_WINDOW:
        raise ParameterError(f"SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}")
    x, y = to_grayscale(a)[:, :, 0], to_grayscale(b)[:, :, 0]
    g = _ssim_window()
    c1, c2 = (SSIM_K1 * 1.0) ** 2, (SSIM_K2 * 1.0) ** 2
    mx, my = _filter_valid(x, g), _filter_valid(y, g)
    sxx = _filter_valid(x * x, g) - mx * mx
    syy = _filter_valid(y * y, g) - my * my
    sxy = _filter_valid(x * y, g) - mx * my
    num = (2.0 * mx * my + c1) * (2.0 * sxy + c2)
    den = (mx * mx + my * my + c1) * (sxx + syy + c2)
    return float(np.mean(num / den))


def similarity(a, b) -> SimilarityReport:
    return SimilarityReport(coss(a, b), psnr(a, b), ssim(a, b))


@dataclass(frozen=True)
class ToyExample:
    toy: np.ndarray
    blurred: np.ndarray
    hist_toy: np.ndarray
    hist_blurred: np.ndarray
    report_toy: SpectrumReport
    report_blurred: SpectrumReport


def build_toy_example(cells: int = 8, size: int = 64, kernel_size: int = 5,
                      sigma: float = 1.0, bins: int = 256) -> ToyExample:
    """White/orange checkerboard upsampled to ``size``, then Gaussian blurred.

    Upsampling replicates pixels so the toy stays two-toned before the blur.
    """
    source = make_checkerboard(cells, WHITE, ORANGE)
    toy = resize_nearest(source, size, size)
    blurred = gaussian_blur(toy, kernel_size, sigma)
    return ToyExample(toy, blurred, histogram(toy, bins), histogram(blurred, bins),
                      spectrum(toy), spectrum(blurred))
