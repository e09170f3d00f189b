"""Resolution changes between the full image and its coarse version."""

import numpy as np

from src.core.errors import InvalidImageError
from src.core.types import CoarseImage, Image


def downscale_average(x: Image, factor: int) -> CoarseImage:
    """Average each ``factor`` x ``factor`` block, per channel.

    Raises:
        InvalidImageError: If either side of ``x`` is not a multiple of ``factor``.
    """
    x.require_divisible(factor)
    h, w = x.height // factor, x.width // factor
    blocks = x.pixels.reshape(h, factor, w, factor, 3)
    return CoarseImage(np.clip(blocks.mean(axis=(1, 3)), 0.0, 1.0))


def _bilinear_taps(n_source: int, factor: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # Half-pixel centres, clamped at the borders (torch align_corners=False).
    pos = (np.arange(n_source * factor, dtype=np.float64) + 0.5) / factor - 0.5
    pos = np.clip(pos, 0.0, n_source - 1)
    lo = np.floor(pos).astype(np.int64)
    hi = np.minimum(lo + 1, n_source - 1)
    return lo, hi, pos - lo


def upscale_bilinear(pixels: np.ndarray, factor: int) -> np.ndarray:
    """Bilinearly enlarge an (H, W, C) array by an integer ``factor``."""
    if factor < 1:
        raise InvalidImageError(f"upscale factor must be >= 1, got {factor}")
    if factor == 1:
        return np.array(pixels, dtype=np.float64)
    r0, r1, fr = _bilinear_taps(pixels.shape[0], factor)
    c0, c1, fc = _bilinear_taps(pixels.shape[1], factor)
    fr = fr[:, None, None]
    rows = pixels[r0] * (1.0 - fr) + pixels[r1] * fr
    fc = fc[None, :, None]
    return rows[:, c0] * (1.0 - fc) + rows[:, c1] * fc


def upscale_coarse(c: CoarseImage, factor: int) -> Image:
    """Expand ``c`` to ``factor`` times its size with bilinear interpolation."""
    return Image(np.clip(upscale_bilinear(c.pixels, factor), 0.0, 1.0))
