"""Shallow reconstruction of (fake) images over a learned dictionary."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .coding import SelectorVector, project_ls, project_weighted, reconstruct_code, row_mask_from_pixels
from .dictlearn import Dictionary
from .errors import DimensionError, ParameterError
from .imaging import (apply_pixel_dropout, as_image, assemble_patches, extract_patches,
                      patch_mask_matrix)


@dataclass(frozen=True)
class PolishConfig:
    method: str = "ksvd"
    tau: int = 20
    dropout_rate: float | None = None  # None: 0.1 for K-SVD, 0 for PCA
    seed: int = 0
    region: np.ndarray | None = None  # boolean (H, W); True = polish this pixel

    def __post_init__(self):
        if self.method not in ("pca", "ksvd"):
            raise ParameterError(f"method must be 'pca' or 'ksvd', got {self.method!r}")
        if self.tau < 1:
            raise ParameterError(f"tau must be >= 1, got {self.tau}")
        if self.dropout_rate is not None and not 0.0 <= self.dropout_rate < 1.0:
            raise ParameterError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")

    @property
    def effective_dropout(self) -> float:
        if self.dropout_rate is not None:
            return self.dropout_rate
        return 0.1 if self.method == "ksvd" else 0.0


def polish_pca(image, dictionary: Dictionary, config: PolishConfig | None = None) -> np.ndarray:
    """Project the whole image onto a global dictionary and reconstruct.

    With a nonzero dropout rate the dropped pixels get zero selector weight.
    """
    config = config or PolishConfig(method="pca")
    image = as_image(image)
    if not dictionary.is_global:
        raise ParameterError("polish_pca needs a global dictionary")
    if image.size != dictionary.d:
        raise DimensionError(f"image has {image.size} values, dictionary expects {dictionary.d}")
    y = image.ravel()
    rate = config.effective_dropout
    if rate > 0.0:
        _, mask = apply_pixel_dropout(image, rate, config.seed)
        code = project_weighted(dictionary, y, SelectorVector(row_mask_from_pixels(mask, image.shape[2]).astype(float)))
    else:
        code = project_ls(dictionary, y)
    return np.clip(reconstruct_code(dictionary, code).reshape(image.shape), 0.0, 1.0)


def _patch_setup(image, dictionary: Dictionary):
    if dictionary.geometry is None:
        raise ParameterError("patch polishing needs a dictionary with patch geometry")
    h, w, c = image.shape
    if c != dictionary.geometry.channels:
        raise DimensionError(f"image has {c} channels, dictionary patches have {dictionary.geometry.channels}")
    return dictionary.geometry.with_image(h, w)


def _code_patches(dictionary: Dictionary, Y, keep, tau) -> np.ndarray:
    """Masked OMP per column, then full-row reconstruction ``D x + mean``."""
    dead = ~keep.any(axis=0)
    if dead.any():
        warnings.warn(f"{int(dead.sum())} patch(es) had every pixel dropped; coded without mask", stacklevel=3)
        keep = keep.copy()
        keep[:, dead] = True
    mean = dictionary.mean[:, None]
    supports, values, counts, _ = _kernels.run_omp_batch(dictionary.atoms, Y - mean, keep, tau)
    X = np.zeros((dictionary.m, Y.shape[1]))
    cols = np.broadcast_to(np.arange(Y.shape[1])[:, None], supports.shape)
    used = supports >= 0
    X[supports[used], cols[used]] = values[used]
    return dictionary.atoms @ X + mean


def polish_ksvd(image, dictionary: Dictionary, config: PolishConfig | None = None) -> np.ndarray:
    """Pixel dropout, masked OMP per patch, full reconstruction, overlap averaging."""
    config = config or PolishConfig(method="ksvd")
    image = as_image(image)
    geometry = _patch_setup(image, dictionary)
    _, mask = apply_pixel_dropout(image, config.effective_dropout, config.seed)
    Y = extract_patches(image, geometry)
    keep = patch_mask_matrix(mask, geometry)
    return assemble_patches(_code_patches(dictionary, Y, keep, config.tau), geometry)


def polish_partial(image, dictionary: Dictionary, config: PolishConfig) -> np.ndarray:
    """Polish only ``config.region``; every other pixel is copied from the input."""
    image = as_image(image)
    if config.region is None:
        return polish(image, dictionary, config)
    region = np.asarray(config.region, dtype=bool)
    if region.shape != image.shape[:2]:
        raise DimensionError(f"region shape {region.shape} does not match image {image.shape[:2]}")
    if not region.any():
        warnings.warn("empty polish region; image returned unchanged", stacklevel=2)
        return image.copy()
    if config.method == "pca":
        full = polish_pca(image, dictionary, config)
    else:
        geometry = _patch_setup(image, dictionary)
        _, mask = apply_pixel_dropout(image, config.effective_dropout, config.seed)
        Y = extract_patches(image, geometry)
        keep = patch_mask_matrix(mask, geometry)
        touched = patch_mask_matrix(region, geometry).any(axis=0)
        recon = Y.copy()
        recon[:, touched] = _code_patches(dictionary, Y[:, touched], keep[:, touched], config.tau)
        # every patch covering a region pixel was coded, so region pixels match a full polish
        full = assemble_patches(recon, geometry)
    return np.where(region[:, :, None], full, image)


def polish(image, dictionary: Dictionary, config: PolishConfig | None = None) -> np.ndarray:
    """Dispatch on ``config.method``; a region makes the polish partial."""
    config = config or PolishConfig(method="pca" if dictionary.is_global else "ksvd")
    if config.region is not None:
        return polish_partial(image, dictionary, config)
    if config.method == "pca":
        return polish_pca(image, dictionary, config)
    return polish_ksvd(image, dictionary, config)
