"""Desk-scale stand-ins for real and GAN-generated images.

Clean images are smooth, exactly periodic low-frequency mixtures; fakes are
derived from them by injecting one of three upsampling footprints.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .imaging import as_image

WHITE = (1.0, 1.0, 1.0)
ORANGE = (1.0, 0.647, 0.0)


class ArtifactType(str, enum.Enum):
    CHECKERBOARD = "transpose_conv_checkerboard"
    UNPOOLING = "unpooling_zerofill"
    INTERPOLATION = "interpolation_periodicity"

    @classmethod
    def parse(cls, name: str) -> "ArtifactType":
        aliases = {"checkerboard": cls.CHECKERBOARD, "unpooling": cls.UNPOOLING,
                   "interpolation": cls.INTERPOLATION}
        if name in aliases:
            return aliases[name]
        return cls(name)


@dataclass(frozen=True)
class ArtifactKind:
    kind: ArtifactType = ArtifactType.CHECKERBOARD
    strength: float = 0.3
    period: int = 4

    def __post_init__(self):
        if not isinstance(self.kind, ArtifactType):
            object.__setattr__(self, "kind", ArtifactType.parse(self.kind))
        if not 0.0 <= self.strength <= 1.0:
            raise ParameterError(f"artifact strength must be in [0, 1], got {self.strength}")
        if self.period not in (2, 4, 8):
            raise ParameterError(f"artifact period must be 2, 4 or 8, got {self.period}")

    def as_dict(self) -> dict:
        return {"kind": self.kind.value, "strength": self.strength, "period": self.period}


MAX_CYCLES = 4.0  # cosine periods are at least size / MAX_CYCLES


def _clean_image(rng, size: int, channels: int) -> np.ndarray:
    yy, xx = np.meshgrid(np.arange(size, dtype=np.float64), np.arange(size, dtype=np.float64), indexing="ij")
    n_waves = int(rng.integers(4, 9))
    # wave vectors uniform over the disc of radius MAX_CYCLES (cycles per image)
    radius = MAX_CYCLES * np.sqrt(rng.uniform(0.0, 1.0, size=n_waves))
    angle = rng.uniform(0.0, np.pi, size=n_waves)
    fy, fx = radius * np.sin(angle), radius * np.cos(angle)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=n_waves)
    amps = rng.uniform(0.3, 1.0, size=(n_waves, channels))
    cy, cx = rng.uniform(0.0, size, size=2)
    radial = np.hypot(yy - cy, xx - cx) / size
    radial_amp = rng.uniform(-1.0, 1.0, size=channels)
    out = np.empty((size, size, channels))
    for c in range(channels):
        img = radial_amp[c] * radial
        for k in range(n_waves):
            img = img + amps[k, c] * np.cos(2.0 * np.pi * (fy[k] * yy + fx[k] * xx) / size + phases[k])
        lo, hi = img.min(), img.max()
        out[:, :, c] = (img - lo) / (hi - lo) if hi > lo else 0.5
    return out


def generate_clean_corpus(n: int, size: int = 32, channels: int = 1, seed: int = 7) -> list[np.ndarray]:
    """``n`` smooth structured images: 4-8 random low-frequency cosines plus a radial gradient."""
    if n < 1:
        raise ParameterError(f"corpus size must be >= 1, got {n}")
    if size < 8:
        raise ParameterError(f"image size must be >= 8, got {size}")
    if channels not in (1, 3):
        raise ParameterError(f"channels must be 1 or 3, got {channels}")
    rng = np.random.default_rng(seed)
    return [_clean_image(rng, size, channels) for _ in range(n)]


def checker_pattern(height: int, width: int, period: int) -> np.ndarray:
    """Zero-mean +-1 checkerboard whose cells are ``period // 2`` pixels wide."""
    half = period // 2
    ry = (np.arange(height) // half) % 2
    rx = (np.arange(width) // half) % 2
    return np.where((ry[:, None] + rx[None, :]) % 2 == 0, 1.0, -1.0)


def _bilinear_weights(n_in: int, n_out: int):
    src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    i0 = np.floor(src).astype(np.intp)
    i1 = np.minimum(i0 + 1, n_in - 1)
    t = src - i0
    return i0, i1, t


def resize_bilinear(image, new_h: int, new_w: int) -> np.ndarray:
    """Bilinear resize with half-pixel-centre alignment and edge clamping."""
    image = as_image(image)
    if new_h < 1 or new_w < 1:
        raise ParameterError("target size must be >= 1")
    h, w = image.shape[:2]
    if (h, w) == (new_h, new_w):
        return image.copy()
    r0, r1, ty = _bilinear_weights(h, new_h)
    c0, c1, tx = _bilinear_weights(w, new_w)
    ty = ty[:, None, None]
    rows = (1.0 - ty) * image[r0] + ty * image[r1]
    tx = tx[None, :, None]
    out = (1.0 - tx) * rows[:, c0] + tx * rows[:, c1]
    return np.clip(out, 0.0, 1.0)


def resize_nearest(image, new_h: int, new_w: int) -> np.ndarray:
    """Nearest-neighbour (pixel replication) resize with half-pixel centres."""
    image = as_image(image)
    if new_h < 1 or new_w < 1:
        raise ParameterError("target size must be >= 1")
    h, w = image.shape[:2]
    rows = np.minimum(((np.arange(new_h) + 0.5) * h / new_h).astype(np.intp), h - 1)
    cols = np.minimum(((np.arange(new_w) + 0.5) * w / new_w).astype(np.intp), w - 1)
    return image[rows][:, cols].copy()


def inject_artifact(image, artifact: ArtifactKind, seed: int = 0) -> np.ndarray:
    """Add an upsampling footprint to a clean image.

    ``seed`` is accepted for interface symmetry; all three footprints are
    deterministic functions of the image.
    """
    image = as_image(image)
    h, w, _ = image.shape
    p, s = artifact.period, artifact.strength
    if h % p or w % p:
        raise ParameterError(f"artifact period {p} must divide image size {h}x{w}")
    if s == 0.0:
        return image.copy()
    if artifact.kind is ArtifactType.CHECKERBOARD:
        out = image + 0.5 * s * checker_pattern(h, w, p)[:, :, None]
    elif artifact.kind is ArtifactType.UNPOOLING:
        zero = np.zeros_like(image)
        zero[::p, ::p] = image[::p, ::p]
        out = (1.0 - s) * image + s * zero
    else:
        small = image.reshape(h // p, p, w // p, p, -1).mean(axis=(1, 3))
        out = (1.0 - s) * image + s * resize_bilinear(small, h, w)
    return np.clip(out, 0.0, 1.0)


def make_checkerboard(cells: int, color_a=WHITE, color_b=ORANGE) -> np.ndarray:
    """``cells x cells`` RGB image alternating two colours, ``color_a`` top-left."""
    if cells < 2:
        raise ParameterError(f"cells must be >= 2, got {cells}")
    a = np.asarray(color_a, dtype=np.float64)
    b = np.asarray(color_b, dtype=np.float64)
    if a.shape != b.shape or a.shape not in ((1,), (3,)):
        raise ParameterError("colours must both be RGB triples or both scalars")
    parity = (np.arange(cells)[:, None] + np.arange(cells)[None, :]) % 2
    return as_image(np.where(parity[:, :, None] == 0, a, b))
