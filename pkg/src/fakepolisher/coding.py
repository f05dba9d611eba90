"""Representations on a dictionary: OMP, least-squares and weighted projections."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DimensionError, ParameterError


@dataclass(frozen=True)
class SparseCode:
    support: np.ndarray  # atom indices in selection order
    values: np.ndarray
    dict_m: int
    residual_norm: float = 0.0

    def __post_init__(self):
        if len(self.support) != len(self.values):
            raise DimensionError("support and values differ in length")
        if len(set(int(j) for j in self.support)) != len(self.support):
            raise ParameterError("support indices must be distinct")
        if len(self.support) and (min(self.support) < 0 or max(self.support) >= self.dict_m):
            raise ParameterError("support index out of range")

    def dense(self) -> np.ndarray:
        x = np.zeros(self.dict_m)
        x[np.asarray(self.support, dtype=np.intp)] = self.values
        return x


@dataclass(frozen=True)
class DenseCode:
    values: np.ndarray
    regularized: bool = False


@dataclass(frozen=True)
class SelectorVector:
    """Per-dimension nonnegative weights ``s``; the projection uses ``s**2``."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1:
            raise DimensionError("selector weights must be a vector")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ParameterError("selector weights must be finite and nonnegative")
        if not np.any(w > 0):
            raise ParameterError("selector needs at least one positive weight")
        object.__setattr__(self, "weights", w)


def _check_signal(dictionary, y) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.shape[0] != dictionary.d:
        raise DimensionError(f"signal length {y.shape[0]} != dictionary dimension {dictionary.d}")
    return y


def row_mask_from_pixels(mask, channels: int = 1) -> np.ndarray:
    """Flatten an ``(h, w)`` kept-pixel mask to a row mask in channel-interleaved order."""
    mask = np.asarray(mask, dtype=bool)
    return np.repeat(mask.reshape(-1), channels)


def omp(dictionary, y, tau: int, mask=None) -> SparseCode:
    """Orthogonal matching pursuit on ``y - mean`` with at most ``tau`` atoms.

    ``mask`` is an optional boolean row mask of length ``d``; only kept rows
    take part in atom selection and the least-squares fits.
    """
    y = _check_signal(dictionary, y)
    if tau < 1:
        raise ParameterError(f"tau must be >= 1, got {tau}")
    if mask is None:
        keep = np.ones(dictionary.d, dtype=bool)
    else:
        keep = np.asarray(mask, dtype=bool).ravel()
        if keep.shape[0] != dictionary.d:
            raise DimensionError("mask length does not match dictionary dimension")
        if not keep.any():
            raise ParameterError("mask keeps no rows")
    supports, values, counts, resid = _kernels.run_omp_batch(
        dictionary.atoms, (y - dictionary.mean)[:, None], keep[:, None], tau
    )
    c = int(counts[0])
    return SparseCode(supports[0, :c].copy(), values[0, :c].copy(), dictionary.m, float(resid[0]))


def omp_matrix(D, Y, tau: int, keep=None) -> np.ndarray:
    """Code every column of ``Y`` against raw atom matrix ``D``; returns the ``m x n`` coefficients."""
    Y = np.asarray(Y, dtype=np.float64)
    if keep is None:
        keep = np.ones(Y.shape, dtype=bool)
    supports, values, counts, _ = _kernels.run_omp_batch(D, Y, keep, tau)
    X = np.zeros((D.shape[1], Y.shape[1]))
    cols = np.broadcast_to(np.arange(Y.shape[1])[:, None], supports.shape)
    used = supports >= 0
    X[supports[used], cols[used]] = values[used]
    return X


def _solve_gram(G, b) -> tuple[np.ndarray, bool]:
    m = G.shape[0]
    evals = np.linalg.eigvalsh(G)
    if evals[0] <= 1e-12 * max(evals[-1], 0.0) or evals[-1] <= 0.0:
        eps = 1e-10 * np.trace(G) / m
        if eps <= 0.0:
            return np.zeros(m), True
        return np.linalg.solve(G + eps * np.eye(m), b), True
    return np.linalg.solve(G, b), False


def project_ls(dictionary, y) -> DenseCode:
    """Dense least-squares code ``(D^T D)^{-1} D^T (y - mean)``."""
    y = _check_signal(dictionary, y)
    D = dictionary.atoms
    centered = y - dictionary.mean
    if dictionary.is_orthonormal:
        return DenseCode(D.T @ centered)
    x, regularized = _solve_gram(D.T @ D, D.T @ centered)
    return DenseCode(x, regularized)


def project_weighted(dictionary, y, selector) -> DenseCode:
    """Weighted least squares with per-row weights ``s**2``."""
    y = _check_signal(dictionary, y)
    if not isinstance(selector, SelectorVector):
        selector = SelectorVector(selector)
    w = selector.weights ** 2
    if w.shape[0] != dictionary.d:
        raise DimensionError("selector length does not match dictionary dimension")
    D = dictionary.atoms
    WD = D * w[:, None]
    x, regularized = _solve_gram(D.T @ WD, WD.T @ (y - dictionary.mean))
    return DenseCode(x, regularized)


def reconstruct_code(dictionary, code) -> np.ndarray:
    """``D x + mean`` for a sparse or dense code."""
    if isinstance(code, SparseCode):
        if code.dict_m != dictionary.m:
            raise DimensionError(f"code built for {code.dict_m} atoms, dictionary has {dictionary.m}")
        idx = np.asarray(code.support, dtype=np.intp)
        return dictionary.atoms[:, idx] @ np.asarray(code.values, dtype=np.float64) + dictionary.mean
    values = np.asarray(code.values if isinstance(code, DenseCode) else code, dtype=np.float64)
    if values.shape != (dictionary.m,):
        raise DimensionError(f"code length {values.shape} does not match {dictionary.m} atoms")
    return dictionary.atoms @ values + dictionary.mean
