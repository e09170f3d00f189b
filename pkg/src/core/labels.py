"""Label-map operations: one-hot expansion and nearest-neighbour resampling."""

import numpy as np

from src.core.errors import InvalidImageError
from src.core.types import OneHotMap, SegmentationMap


def one_hot(s: SegmentationMap) -> OneHotMap:
    """Expand ``s`` into ``n_classes`` planes; plane k is 1 exactly where the label is k."""
    classes = np.arange(s.n_classes, dtype=np.uint8)[:, None, None]
    return OneHotMap((s.labels[None, :, :] == classes).astype(np.uint8))


def nearest_indices(source: int, target: int) -> np.ndarray:
    """Source coordinate sampled by each of ``target`` output positions.

    Output position ``i`` reads source position ``floor(i * source / target)``,
    the same rule torch's ``interpolate(mode="nearest")`` applies.
    """
    return (np.arange(target, dtype=np.int64) * source) // target


def resize_labels_nearest(s: SegmentationMap, h: int, w: int) -> SegmentationMap:
    """Resample ``s`` to ``h`` x ``w``; labels are copied, never averaged."""
    if h < 1 or w < 1:
        raise InvalidImageError(f"target size must be at least 1x1, got {h}x{w}")
    if (h, w) == s.size:
        return s
    rows = nearest_indices(s.height, h)
    cols = nearest_indices(s.width, w)
    return SegmentationMap(s.labels[np.ix_(rows, cols)], s.n_classes)
