"""Shared domain types, value-range conventions and label-map arithmetic."""

from src.core.labels import nearest_indices, one_hot, resize_labels_nearest
from src.core.ranges import from_model_range, to_model_range
from src.core.types import CoarseImage, Image, ModelRangeImage, OneHotMap, SegmentationMap

__all__ = [
    "CoarseImage",
    "Image",
    "ModelRangeImage",
    "OneHotMap",
    "SegmentationMap",
    "from_model_range",
    "nearest_indices",
    "one_hot",
    "resize_labels_nearest",
    "to_model_range",
]
