"""PCA and K-SVD dictionary learning, atom subsetting, and the FPDICT01 file format."""

from __future__ import annotations

import enum
import logging
import struct
import warnings
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .coding import omp_matrix
from .errors import DimensionError, FormatError, ParameterError, RankError
from .imaging import PatchGeometry

log = logging.getLogger(__name__)

UNIT_NORM_TOL = 1e-8


class DictKind(enum.IntEnum):
    PCA = 0
    KSVD = 1


@dataclass(frozen=True, eq=False)
class Dictionary:
    """Atom matrix ``atoms`` (``d x m``, one atom per column) plus training metadata.

    ``geometry`` is ``None`` for a global dictionary whose atoms span whole
    images.
    """

    atoms: np.ndarray
    kind: DictKind
    mean: np.ndarray
    geometry: PatchGeometry | None = None
    n_train: int = 0
    sparsity: int | None = None
    iterations: int | None = None
    seed: int = 0

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=np.float64)
        mean = np.asarray(self.mean, dtype=np.float64)
        if atoms.ndim != 2 or mean.shape != (atoms.shape[0],):
            raise DimensionError(f"atoms {atoms.shape} and mean {mean.shape} are inconsistent")
        norms = np.linalg.norm(atoms, axis=0)
        if np.any(np.abs(norms - 1.0) > UNIT_NORM_TOL):
            raise ParameterError("dictionary atoms must have unit l2 norm")
        kind = DictKind(self.kind)
        if kind is DictKind.PCA and atoms.shape[1] > atoms.shape[0]:
            raise ParameterError("a PCA dictionary cannot have more atoms than dimensions")
        if self.geometry is not None and self.geometry.dim != atoms.shape[0]:
            raise DimensionError(f"geometry patch dimension {self.geometry.dim} != {atoms.shape[0]}")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "kind", kind)

    @property
    def d(self) -> int:
        return self.atoms.shape[0]

    @property
    def m(self) -> int:
        return self.atoms.shape[1]

    @property
    def is_orthonormal(self) -> bool:
        return self.kind is DictKind.PCA

    @property
    def is_global(self) -> bool:
        return self.geometry is None


@dataclass(frozen=True)
class TrainConfig:
    n_components: int
    sparsity: int = 15
    iterations: int = 10
    seed: int = 0
    tolerance: float = 1e-4

    def __post_init__(self):
        if self.n_components < 1:
            raise ParameterError(f"n_components must be >= 1, got {self.n_components}")
        if self.sparsity < 1:
            raise ParameterError(f"sparsity must be >= 1, got {self.sparsity}")
        if self.iterations < 1:
            raise ParameterError(f"iterations must be >= 1, got {self.iterations}")
        if self.seed < 0:
            raise ParameterError("seed must be nonnegative")


@dataclass
class KSVDTrace:
    """Per-iteration Frobenius errors: after sparse coding and after the atom update."""

    coding_error: list = field(default_factory=list)
    update_error: list = field(default_factory=list)


def _canonical_sign(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is nonnegative."""
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return signs


def _as_patch_matrix(Y) -> np.ndarray:
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2:
        raise DimensionError(f"training matrix must be 2-D (d x n), got {Y.shape}")
    return Y


def train_pca(Y, n_components: int, geometry: PatchGeometry | None = None) -> Dictionary:
    """Top principal directions of the column-centered training matrix."""
    Y = _as_patch_matrix(Y)
    d, n = Y.shape
    if n < 2:
        raise ParameterError("PCA needs at least two training columns")
    if not 1 <= n_components <= min(d, n):
        raise ParameterError(f"n_components must be in [1, {min(d, n)}], got {n_components}")
    mean = Y.mean(axis=1)
    U, s, _ = np.linalg.svd(Y - mean[:, None], full_matrices=False)
    rank = int(np.sum(s > max(d, n) * np.finfo(float).eps * (s[0] if s.size else 0.0)))
    if n_components > rank:
        raise RankError(f"requested {n_components} components but centered data has rank {rank}")
    atoms = U[:, :n_components]
    atoms = atoms * _canonical_sign(atoms)
    return Dictionary(atoms, DictKind.PCA, mean, geometry, n_train=n)


def _normalize_columns(M: np.ndarray, rng) -> np.ndarray:
    norms = np.linalg.norm(M, axis=0)
    for j in np.flatnonzero(norms <= 1e-12):
        v = rng.standard_normal(M.shape[0])
        M[:, j] = v
        norms[j] = np.linalg.norm(v)
    return M / norms


def _frobenius(Y, D, X) -> float:
    return float(np.linalg.norm(Y - D @ X))


def update_atoms(Y, D, X) -> tuple[np.ndarray, np.ndarray]:
    """One sequential K-SVD dictionary update with supports held fixed.

    Each used atom and its coefficient row become the leading singular pair of
    the residual restricted to the columns that use it.  Unused atoms are
    replaced by the worst-represented training column, normalized.
    """
    D = D.copy()
    X = X.copy()
    R = Y - D @ X
    taken = np.zeros(Y.shape[1], dtype=bool)
    for j in range(D.shape[1]):
        omega = np.flatnonzero(X[j])
        if omega.size == 0:
            err = np.einsum("ij,ij->j", R, R)
            err[taken] = -1.0
            worst = int(np.argmax(err))
            col_norm = np.linalg.norm(Y[:, worst])
            if err[worst] > 1e-24 and col_norm > 1e-12:
                D[:, j] = Y[:, worst] / col_norm
                taken[worst] = True
            continue
        E = R[:, omega] + np.outer(D[:, j], X[j, omega])
        U, s, Vt = np.linalg.svd(E, full_matrices=False)
        if s[0] <= 0.0:
            continue
        u, v = U[:, 0], Vt[0]
        k = int(np.argmax(np.abs(u)))
        if u[k] < 0:
            u, v = -u, -v
        D[:, j] = u / np.linalg.norm(u)
        X[j, omega] = s[0] * v
        R[:, omega] = E - np.outer(D[:, j], X[j, omega])
    return D, X


def train_ksvd(Y, config: TrainConfig, geometry: PatchGeometry | None = None,
               trace: KSVDTrace | None = None) -> Dictionary:
    Y = _as_patch_matrix(Y)
    d, n = Y.shape
    m, K = config.n_components, config.sparsity
    if K > d:
        raise ParameterError(f"sparsity {K} exceeds signal dimension {d}")
    if K > m:
        raise ParameterError(f"sparsity {K} exceeds dictionary size {m}")
    rng = np.random.default_rng(config.seed)
    if n < m:
        warnings.warn(f"K-SVD with fewer training columns ({n}) than atoms ({m})", stacklevel=2)
        init = np.concatenate([Y, rng.standard_normal((d, m - n))], axis=1)
    else:
        init = Y[:, rng.choice(n, size=m, replace=False)].copy()
    D = _normalize_columns(init, rng)

    if trace is None:
        trace = KSVDTrace()
    previous = None
    done = 0
    for it in range(config.iterations):
        X = omp_matrix(D, Y, K)
        before = _frobenius(Y, D, X)
        replaced = not np.all(X.any(axis=1))
        D, X = update_atoms(Y, D, X)
        after = _frobenius(Y, D, X)
        trace.coding_error.append(before)
        trace.update_error.append(after)
        done = it + 1
        log.debug("ksvd iteration %d: coding error %.6g, update error %.6g", done, before, after)
        if after <= 0.0:
            break
        # replaced atoms only pay off at the next coding stage, so never stop right after one
        if previous is not None and not replaced and (previous - after) / previous < config.tolerance:
            break
        previous = after
    return Dictionary(D, DictKind.KSVD, np.zeros(d), geometry, n_train=n,
                      sparsity=K, iterations=done, seed=config.seed)


def subset_atoms(dictionary: Dictionary, count: int, Y_ref=None) -> Dictionary:
    """Keep ``count`` atoms: the leading ones for PCA, the most used ones for K-SVD.

    K-SVD usage is the total absolute coefficient mass when ``Y_ref`` is coded
    at the training sparsity.  Kept atoms stay in their original order.
    """
    if not 1 <= count <= dictionary.m:
        raise ParameterError(f"count must be in [1, {dictionary.m}], got {count}")
    if dictionary.kind is DictKind.PCA:
        keep = np.arange(count)
    else:
        if Y_ref is None:
            raise ParameterError("K-SVD subsetting needs a reference patch matrix")
        Y_ref = _as_patch_matrix(Y_ref)
        if Y_ref.shape[0] != dictionary.d:
            raise DimensionError("reference patches do not match dictionary dimension")
        K = dictionary.sparsity or 1
        X = omp_matrix(dictionary.atoms, Y_ref - dictionary.mean[:, None], min(K, dictionary.d))
        usage = np.abs(X).sum(axis=1)
        # stable sort on -usage: ties go to the lower index
        keep = np.sort(np.argsort(-usage, kind="stable")[:count])
    return Dictionary(dictionary.atoms[:, keep].copy(), dictionary.kind, dictionary.mean.copy(),
                      dictionary.geometry, dictionary.n_train, dictionary.sparsity,
                      dictionary.iterations, dictionary.seed)


# -- persistence -------------------------------------------------------------

MAGIC = b"FPDICT01"
_HEADER = struct.Struct("<8sBII")
_GEOMETRY = struct.Struct("<HHIIB")
_META = struct.Struct("<QHHQ")
_CRC = struct.Struct("<I")


def dictionary_to_bytes(dictionary: Dictionary) -> bytes:
    g = dictionary.geometry
    geom = (0, 0, 0, 0, 0) if g is None else (g.patch_size, g.stride, g.image_height, g.image_width, g.channels)
    body = b"".join([
        _HEADER.pack(MAGIC, int(dictionary.kind), dictionary.d, dictionary.m),
        _GEOMETRY.pack(*geom),
        _META.pack(dictionary.n_train, dictionary.sparsity or 0, dictionary.iterations or 0, dictionary.seed),
        dictionary.mean.astype("<f8").tobytes(),
        dictionary.atoms.astype("<f8").tobytes(order="F"),
    ])
    return body + _CRC.pack(zlib.crc32(body))


def dictionary_from_bytes(blob: bytes) -> Dictionary:
    fixed = _HEADER.size + _GEOMETRY.size + _META.size
    if len(blob) < fixed + _CRC.size:
        raise FormatError(f"dictionary file truncated ({len(blob)} bytes)")
    magic, kind, d, m = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    expected = fixed + 8 * d + 8 * d * m + _CRC.size
    if len(blob) != expected:
        raise FormatError(f"dictionary file has {len(blob)} bytes, header implies {expected} (truncated?)")
    (crc,) = _CRC.unpack_from(blob, len(blob) - _CRC.size)
    if zlib.crc32(blob[:-_CRC.size]) != crc:
        raise FormatError("checksum mismatch: CRC32 of dictionary file does not match")
    if kind not in (0, 1):
        raise FormatError(f"unknown dictionary kind {kind}")
    ps, stride, H, W, C = _GEOMETRY.unpack_from(blob, _HEADER.size)
    n, K, iters, seed = _META.unpack_from(blob, _HEADER.size + _GEOMETRY.size)
    geometry = None if (ps, stride, H, W, C) == (0, 0, 0, 0, 0) else PatchGeometry(ps, stride, H, W, C)
    off = fixed
    mean = np.frombuffer(blob, dtype="<f8", count=d, offset=off).astype(np.float64)
    off += 8 * d
    atoms = np.frombuffer(blob, dtype="<f8", count=d * m, offset=off).reshape((d, m), order="F").astype(np.float64)
    return Dictionary(atoms, DictKind(kind), mean, geometry, n_train=n,
                      sparsity=K or None, iterations=iters or None, seed=seed)


def save_dictionary(dictionary: Dictionary, path) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(dictionary_to_bytes(dictionary))
    tmp.replace(path)


def load_dictionary(path) -> Dictionary:
    return dictionary_from_bytes(Path(path).read_bytes())
