"""Image model, patch extraction/reassembly, dropout masks, blur and file I/O.

Images are plain ``float64`` arrays of shape ``(H, W, C)`` with ``C`` in
``{1, 3}`` and every value in ``[0, 1]``.  Pixel masks are boolean ``(H, W)``
arrays where ``True`` means the pixel is kept.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import DimensionError, ParameterError

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


def as_image(data, *, clip: bool = False) -> np.ndarray:
    """Validate ``data`` as an image and return it as a float64 ``(H, W, C)`` array.

    2-D input is treated as a single-channel image.  With ``clip=True`` values
    are clipped into ``[0, 1]`` instead of being rejected.
    """
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise DimensionError(f"expected (H, W, 1|3) image, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"empty image of shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ParameterError("image contains non-finite values")
    if clip:
        return np.clip(arr, 0.0, 1.0)
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ParameterError("image intensities must lie in [0, 1]")
    return arr


def axis_origins(length: int, patch_size: int, stride: int) -> np.ndarray:
    """Patch origins along one axis: 0, stride, 2*stride, ... plus a clamped last origin."""
    last = length - patch_size
    origins = list(range(0, last + 1, stride))
    if origins[-1] != last:
        origins.append(last)
    return np.asarray(origins, dtype=np.intp)


@dataclass(frozen=True)
class PatchGeometry:
    patch_size: int
    stride: int
    image_height: int
    image_width: int
    channels: int = 1

    def __post_init__(self):
        if self.channels not in (1, 3):
            raise ParameterError(f"channels must be 1 or 3, got {self.channels}")
        if not 1 <= self.stride <= self.patch_size:
            raise ParameterError(f"need 1 <= stride <= patch_size, got stride={self.stride}, patch_size={self.patch_size}")
        if self.patch_size > min(self.image_height, self.image_width):
            raise ParameterError(
                f"patch_size {self.patch_size} exceeds image side {min(self.image_height, self.image_width)}"
            )

    @property
    def dim(self) -> int:
        return self.patch_size * self.patch_size * self.channels

    @property
    def row_origins(self) -> np.ndarray:
        return axis_origins(self.image_height, self.patch_size, self.stride)

    @property
    def col_origins(self) -> np.ndarray:
        return axis_origins(self.image_width, self.patch_size, self.stride)

    @property
    def n_patches(self) -> int:
        return len(self.row_origins) * len(self.col_origins)

    @property
    def image_shape(self) -> tuple[int, int, int]:
        return (self.image_height, self.image_width, self.channels)

    def with_image(self, image_height: int, image_width: int) -> "PatchGeometry":
        """Same patch layout applied to an image of a different size."""
        return PatchGeometry(self.patch_size, self.stride, image_height, image_width, self.channels)


def _check_geometry(image: np.ndarray, geometry: PatchGeometry) -> None:
    if image.shape != geometry.image_shape:
        raise DimensionError(f"image shape {image.shape} does not match geometry {geometry.image_shape}")


def extract_patches(image, geometry: PatchGeometry) -> np.ndarray:
    """Return the ``d x n`` patch matrix, columns in raster order of patch origins."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 2:
        image = image[:, :, None]
    _check_geometry(image, geometry)
    p = geometry.patch_size
    windows = np.lib.stride_tricks.sliding_window_view(image, (p, p), axis=(0, 1))
    # windows: (H-p+1, W-p+1, C, p, p) -> pick origins, reorder to (rows, cols, p, p, C)
    picked = windows[np.ix_(geometry.row_origins, geometry.col_origins)]
    picked = picked.transpose(0, 1, 3, 4, 2)
    return np.ascontiguousarray(picked.reshape(geometry.n_patches, geometry.dim).T)


def patch_mask_matrix(mask: np.ndarray, geometry: PatchGeometry) -> np.ndarray:
    """Expand an ``(H, W)`` pixel mask into a boolean ``d x n`` row mask aligned with patches."""
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (geometry.image_height, geometry.image_width):
        raise DimensionError(f"mask shape {mask.shape} does not match geometry")
    expanded = np.repeat(mask[:, :, None], geometry.channels, axis=2).astype(np.float64)
    return extract_patches(expanded, geometry) > 0.5


def assemble_patches(patches, geometry: PatchGeometry) -> np.ndarray:
    """Average overlapping patch values back into an image, clipped to ``[0, 1]``."""
    patches = np.asarray(patches, dtype=np.float64)
    if patches.shape != (geometry.dim, geometry.n_patches):
        raise DimensionError(
            f"patch matrix shape {patches.shape} does not match geometry ({geometry.dim}, {geometry.n_patches})"
        )
    p, c = geometry.patch_size, geometry.channels
    acc = np.zeros(geometry.image_shape)
    weight = np.zeros(geometry.image_shape[:2])
    blocks = patches.T.reshape(len(geometry.row_origins), len(geometry.col_origins), p, p, c)
    for i, r in enumerate(geometry.row_origins):
        for j, q in enumerate(geometry.col_origins):
            acc[r:r + p, q:q + p] += blocks[i, j]
            weight[r:r + p, q:q + p] += 1.0
    return np.clip(acc / weight[:, :, None], 0.0, 1.0)


def to_grayscale(image) -> np.ndarray:
    """BT.601 luma for RGB input; single-channel input is returned unchanged."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 2:
        image = image[:, :, None]
    if image.shape[2] == 1:
        return image
    if image.shape[2] != 3:
        raise DimensionError(f"expected 1 or 3 channels, got {image.shape[2]}")
    return (image @ LUMA_WEIGHTS)[:, :, None]


def gaussian_kernel(kernel_size: int, sigma: float) -> np.ndarray:
    """Normalized 2-D Gaussian kernel of odd side ``kernel_size``."""
    if kernel_size < 1 or kernel_size % 2 == 0:
        raise ParameterError(f"kernel_size must be odd and >= 1, got {kernel_size}")
    if sigma <= 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    g = _gaussian_1d(kernel_size, sigma)
    return np.outer(g, g)


def _gaussian_1d(kernel_size: int, sigma: float) -> np.ndarray:
    r = kernel_size // 2
    x = np.arange(-r, r + 1, dtype=np.float64)
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return g / g.sum()


def gaussian_blur(image, kernel_size: int = 5, sigma: float = 1.0) -> np.ndarray:
    """Separable Gaussian blur per channel with half-sample symmetric edges.

    Half-sample reflection makes the blur preserve the image mean exactly.
    """
    image = as_image(image)
    if kernel_size < 1 or kernel_size % 2 == 0:
        raise ParameterError(f"kernel_size must be odd and >= 1, got {kernel_size}")
    if kernel_size == 1:
        return image.copy()
    g = _gaussian_1d(kernel_size, sigma)
    out = ndimage.correlate1d(image, g, axis=0, mode="reflect")
    out = ndimage.correlate1d(out, g, axis=1, mode="reflect")
    return np.clip(out, 0.0, 1.0)


def apply_pixel_dropout(image, rate: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Pick ``floor(rate * H * W)`` distinct pixel sites to drop.

    Returns the unchanged image and a kept-pixel mask; dropped pixels are
    excluded downstream through the mask rather than zeroed.
    """
    image = as_image(image)
    if not 0.0 <= rate < 1.0:
        raise ParameterError(f"dropout rate must be in [0, 1), got {rate}")
    h, w = image.shape[:2]
    n_drop = int(np.floor(rate * h * w))
    mask = np.ones(h * w, dtype=bool)
    if n_drop:
        rng = np.random.default_rng(seed)
        mask[rng.choice(h * w, size=n_drop, replace=False)] = False
    return image, mask.reshape(h, w)


def kept_fraction(mask: np.ndarray) -> float:
    return float(np.mean(mask))


# -- file I/O -----------------------------------------------------------------

def read_image(path) -> np.ndarray:
    """Read a PNG or binary PPM/PGM file into a ``[0, 1]`` image."""
    from PIL import Image as PILImage

    with PILImage.open(path) as im:
        if im.mode in ("L", "RGB"):
            arr = np.asarray(im)
        elif im.mode in ("1", "P", "LA", "I;16", "I"):
            arr = np.asarray(im.convert("L"))
        else:
            arr = np.asarray(im.convert("RGB"))
    if arr.dtype != np.uint8:
        raise ParameterError(f"{path}: only 8-bit images are supported")
    return as_image(arr.astype(np.float64) / 255.0)


def to_bytes(image) -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    return np.clip(np.round(image * 255.0), 0, 255).astype(np.uint8)


def write_image(image, path) -> None:
    """Write an image as 8-bit PNG or PPM/PGM (chosen by suffix), atomically."""
    from PIL import Image as PILImage

    path = Path(path)
    data = to_bytes(as_image(image, clip=True))
    pil = PILImage.fromarray(data[:, :, 0] if data.shape[2] == 1 else data)
    suffix = path.suffix.lower()
    fmt = {".png": "PNG", ".ppm": "PPM", ".pgm": "PPM", ".pnm": "PPM"}.get(suffix)
    if fmt is None:
        raise ParameterError(f"unsupported image suffix {suffix!r}")
    tmp = path.with_name(path.name + ".tmp")
    pil.save(tmp, format=fmt)
    tmp.replace(path)
