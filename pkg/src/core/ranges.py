"""Conversions between the [0, 1] pixel range and the [-1, 1] model range."""

import numpy as np

from src.core.errors import InvalidImageError
from src.core.types import CoarseImage, Image, ModelRangeImage


def to_model_range(img: Image | CoarseImage | np.ndarray) -> ModelRangeImage:
    """Map pixel values ``v`` in [0, 1] to ``2v - 1``.

    Raises:
        InvalidImageError: If a raw array holds values outside [0, 1].
    """
    pixels = img.pixels if isinstance(img, (Image, CoarseImage)) else np.asarray(img, dtype=np.float64)
    if not np.all(np.isfinite(pixels)) or pixels.min() < 0.0 or pixels.max() > 1.0:
        raise InvalidImageError("to_model_range expects finite values in [0, 1]")
    return ModelRangeImage(2.0 * pixels - 1.0)


def from_model_range(m: ModelRangeImage | np.ndarray) -> Image:
    """Map model values back to [0, 1]; sampler overshoot is clipped, not rejected."""
    values = m.pixels if isinstance(m, ModelRangeImage) else np.asarray(m, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise InvalidImageError("from_model_range expects finite values")
    return Image(np.clip((np.clip(values, -1.0, 1.0) + 1.0) / 2.0, 0.0, 1.0))
