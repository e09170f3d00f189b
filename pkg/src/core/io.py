"""Raster file I/O. Pixels are 8-bit only on disk; in memory they are [0, 1] floats."""

from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from src.core.errors import InvalidImageError
from src.core.types import CoarseImage, Image, SegmentationMap

_ALPHA_MODES = {"RGBA", "LA", "PA", "RGBa", "La"}


def to_uint8(pixels: np.ndarray) -> np.ndarray:
    """Quantize [0, 1] floats to 8-bit with round-half-to-even."""
    return np.clip(np.rint(pixels * 255.0), 0, 255).astype(np.uint8)


def from_uint8(raw: np.ndarray) -> np.ndarray:
    return raw.astype(np.float64) / 255.0


def read_rgb(path: str | Path) -> np.ndarray:
    """Read an image file as a ``(height, width, 3)`` uint8 array."""
    with PILImage.open(path) as pil:
        if pil.mode in _ALPHA_MODES or "transparency" in pil.info:
            raise InvalidImageError(f"{path}: images with an alpha channel are not supported")
        return np.asarray(pil.convert("RGB"), dtype=np.uint8)


def load_image(path: str | Path, factor: int | None = None) -> Image:
    """Load an RGB image; when ``factor`` is given its sides must be multiples of it."""
    img = Image(from_uint8(read_rgb(path)))
    if factor is not None:
        img.require_divisible(factor)
    return img


def save_image(img: Image | CoarseImage, path: str | Path) -> Path:
    """Write an image as 8-bit PNG."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    PILImage.fromarray(to_uint8(img.pixels)).save(path, format="PNG")
    return path


def load_labels(path: str | Path, n_classes: int) -> SegmentationMap:
    """Load a single-channel 8-bit label raster."""
    with PILImage.open(path) as pil:
        if pil.mode not in ("L", "P"):
            raise InvalidImageError(f"{path}: label rasters must be single-channel, got {pil.mode}")
        labels = np.asarray(pil, dtype=np.uint8)
    return SegmentationMap(labels, n_classes)


def save_labels(s: SegmentationMap, path: str | Path) -> Path:
    """Write a label map as single-channel 8-bit PNG."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    PILImage.fromarray(np.ascontiguousarray(s.labels)).save(path, format="PNG")
    return path
