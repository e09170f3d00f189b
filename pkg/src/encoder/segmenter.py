"""Segmenters producing the semantic map transmitted alongside the coarse image.

Any object with ``name``, ``n_classes`` and ``__call__(Image) ->
SegmentationMap`` can be plugged in. Two are bundled:

- :class:`PrototypeSegmenter` labels each pixel with the nearest class
  prototype colour. It segments the synthetic-shapes corpus and is used on
  both sides of the mIoU evaluation.
- :class:`GroundTruthSegmenter` hands back the dataset annotation of an
  image it has been given, keyed by pixel content.
"""

import hashlib
from collections.abc import Iterable, Sequence
from typing import Protocol, runtime_checkable

import numpy as np
from loguru import logger

from src.analysis.constants import SYNTHETIC_CLASS_COLORS
from src.core.errors import SegmenterError
from src.core.io import to_uint8
from src.core.types import Image, SegmentationMap


@runtime_checkable
class SegmenterInterface(Protocol):
    name: str
    n_classes: int

    def __call__(self, x: Image) -> SegmentationMap: ...


def segment(x: Image, seg: SegmenterInterface) -> SegmentationMap:
    """
    Run ``seg`` on ``x`` and enforce the segmenter contract.

    Parameters:
    -----------
    x : Image to segment
    seg : Segmenter implementation

    Returns:
    --------
    SegmentationMap with the dimensions of ``x`` and labels below ``seg.n_classes``

    Raises:
    -------
    SegmenterError : If the segmenter fails or returns a map that breaks the contract
    """
    try:
        s = seg(x)
    except SegmenterError:
        raise
    except Exception as e:
        raise SegmenterError(f"segmenter {seg.name!r} failed: {e}") from e

    if not isinstance(s, SegmentationMap):
        raise SegmenterError(f"segmenter {seg.name!r} returned {type(s).__name__}")
    if s.size != x.size:
        raise SegmenterError(f"segmenter {seg.name!r} returned {s.size} for an image of {x.size}")
    if s.n_classes != seg.n_classes:
        raise SegmenterError(
            f"segmenter {seg.name!r} declares {seg.n_classes} classes but labelled with {s.n_classes}"
        )
    return s


class PrototypeSegmenter:
    """Nearest-prototype-colour classifier."""

    name = "prototype"

    def __init__(self, prototypes: Sequence[Sequence[float]] = SYNTHETIC_CLASS_COLORS):
        protos = np.asarray(prototypes, dtype=np.float64)
        if protos.ndim != 2 or protos.shape[1] != 3 or not 1 <= protos.shape[0] <= 255:
            raise ValueError(f"prototypes must be an (n_classes, 3) array, got {protos.shape}")
        self.prototypes = protos
        self.n_classes = int(protos.shape[0])

    def __call__(self, x: Image) -> SegmentationMap:
        diff = x.pixels[:, :, None, :] - self.prototypes[None, None, :, :]
        labels = np.argmin(np.einsum("hwkc,hwkc->hwk", diff, diff), axis=2)
        return SegmentationMap(labels.astype(np.uint8), self.n_classes)


def image_digest(x: Image) -> str:
    """Content key of an image at 8-bit precision."""
    raw = to_uint8(x.pixels)
    h = hashlib.sha256(f"{raw.shape}".encode())
    h.update(raw.tobytes())
    return h.hexdigest()


class GroundTruthSegmenter:
    """Passthrough segmenter returning registered annotations."""

    name = "ground_truth"

    def __init__(self, n_classes: int, pairs: Iterable[tuple[Image, SegmentationMap]] = ()):
        self.n_classes = n_classes
        self._maps: dict[str, SegmentationMap] = {}
        for x, s in pairs:
            self.register(x, s)

    def register(self, x: Image, s: SegmentationMap) -> None:
        if s.n_classes != self.n_classes:
            raise SegmenterError(f"annotation has {s.n_classes} classes, expected {self.n_classes}")
        self._maps[image_digest(x)] = s

    def __len__(self) -> int:
        return len(self._maps)

    def __call__(self, x: Image) -> SegmentationMap:
        s = self._maps.get(image_digest(x))
        if s is None:
            raise SegmenterError("no annotation registered for this image")
        return s


def build_segmenter(kind: str, n_classes: int, pairs: Iterable[tuple[Image, SegmentationMap]] = ()):
    """Segmenter selected by the ``segmenter`` setting."""
    if kind == "prototype":
        seg = PrototypeSegmenter()
        if seg.n_classes != n_classes:
            logger.warning(
                f"prototype segmenter has {seg.n_classes} classes, configured n_classes={n_classes}"
            )
        return seg
    if kind == "ground_truth":
        return GroundTruthSegmenter(n_classes, pairs)
    raise ValueError(f"unknown segmenter: {kind}")
