"""Domain value types shared by every module.

All rasters are immutable: constructors copy their input into a read-only
numpy array after validating it. Colour rasters are ``(height, width, 3)``
float64 arrays; label rasters are ``(height, width)`` uint8 arrays.
"""

from dataclasses import dataclass

import numpy as np

from src.core.errors import InvalidImageError

MAX_CLASSES = 255


def _frozen(array: np.ndarray, dtype: type) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def _check_rgb(pixels: np.ndarray, low: float, high: float, kind: str) -> None:
    if pixels.ndim != 3 or pixels.shape[2] != 3:
        raise InvalidImageError(f"{kind} must have shape (height, width, 3), got {pixels.shape}")
    if pixels.shape[0] == 0 or pixels.shape[1] == 0:
        raise InvalidImageError(f"{kind} must be at least 1x1, got {pixels.shape[:2]}")
    if not np.all(np.isfinite(pixels)):
        raise InvalidImageError(f"{kind} contains non-finite values")
    if pixels.min() < low or pixels.max() > high:
        raise InvalidImageError(
            f"{kind} values must lie in [{low}, {high}], "
            f"got [{pixels.min():.6g}, {pixels.max():.6g}]"
        )


@dataclass(frozen=True, eq=False)
class _RgbRaster:
    pixels: np.ndarray

    _low = 0.0
    _high = 1.0

    def __post_init__(self) -> None:
        pixels = _frozen(self.pixels, np.float64)
        _check_rgb(pixels, self._low, self._high, type(self).__name__)
        object.__setattr__(self, "pixels", pixels)

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def channels(self) -> int:
        return 3

    @property
    def size(self) -> tuple[int, int]:
        """(height, width) in pixels."""
        return self.height, self.width

    def __eq__(self, other: object) -> bool:
        if type(other) is not type(self):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    __hash__ = None


class Image(_RgbRaster):
    """Full-resolution RGB raster with values in [0, 1]."""

    def require_divisible(self, factor: int) -> "Image":
        """Return self, or raise if either side is not a multiple of ``factor``."""
        if factor < 1:
            raise InvalidImageError(f"downscale factor must be >= 1, got {factor}")
        if self.height % factor or self.width % factor:
            raise InvalidImageError(
                f"image {self.height}x{self.width} is not divisible by factor {factor}"
            )
        return self


class CoarseImage(_RgbRaster):
    """Downscaled RGB raster with values in [0, 1]."""


class ModelRangeImage(_RgbRaster):
    """RGB raster rescaled to [-1, 1] for the denoiser."""

    _low = -1.0
    _high = 1.0


@dataclass(frozen=True, eq=False)
class SegmentationMap:
    """Per-pixel class labels in ``[0, n_classes)``."""

    labels: np.ndarray
    n_classes: int

    def __post_init__(self) -> None:
        if not 1 <= self.n_classes <= MAX_CLASSES:
            raise InvalidImageError(f"n_classes must be in [1, {MAX_CLASSES}], got {self.n_classes}")
        raw = np.asarray(self.labels)
        if raw.ndim != 2 or raw.shape[0] == 0 or raw.shape[1] == 0:
            raise InvalidImageError(f"label map must be a non-empty 2-D array, got {raw.shape}")
        if not np.issubdtype(raw.dtype, np.integer):
            raise InvalidImageError(f"labels must be integers, got dtype {raw.dtype}")
        if raw.min() < 0 or raw.max() >= self.n_classes:
            raise InvalidImageError(
                f"labels must lie in [0, {self.n_classes}), got [{raw.min()}, {raw.max()}]"
            )
        object.__setattr__(self, "labels", _frozen(raw, np.uint8))

    @property
    def height(self) -> int:
        return int(self.labels.shape[0])

    @property
    def width(self) -> int:
        return int(self.labels.shape[1])

    @property
    def size(self) -> tuple[int, int]:
        return self.height, self.width

    def present_labels(self) -> np.ndarray:
        """Sorted distinct labels that occur in the map."""
        return np.unique(self.labels)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SegmentationMap):
            return NotImplemented
        return self.n_classes == other.n_classes and np.array_equal(self.labels, other.labels)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class OneHotMap:
    """``n_classes`` indicator planes of shape ``(n_classes, height, width)``."""

    planes: np.ndarray

    def __post_init__(self) -> None:
        planes = _frozen(self.planes, np.uint8)
        if planes.ndim != 3:
            raise InvalidImageError(f"one-hot map must be 3-D, got {planes.shape}")
        if planes.max(initial=0) > 1 or not np.all(planes.sum(axis=0) == 1):
            raise InvalidImageError("one-hot map must hold exactly one 1 per pixel")
        object.__setattr__(self, "planes", planes)

    @property
    def n_classes(self) -> int:
        return int(self.planes.shape[0])

    @property
    def size(self) -> tuple[int, int]:
        return int(self.planes.shape[1]), int(self.planes.shape[2])

    __hash__ = None
