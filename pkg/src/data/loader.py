"""
Dataset ingestion for semantic image coding experiments.

This module scans a dataset root into a validated manifest of
(image, annotation, split) entries and loads them as domain values.

Supported layouts:
- synthetic:  images/<split>/<id>.png + labels/<split>/<id>.png (+ classes.json)
- cityscapes: leftImg8bit/<split>/<city>/<stem>_leftImg8bit.png
              + gtFine/<split>/<city>/<stem>_gtFine_labelIds.png
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Optional

import numpy as np
import polars as pl
from loguru import logger
from PIL import Image as PILImage

from src.analysis.constants import CITYSCAPES_N_CLASSES, SYNTHETIC_N_CLASSES
from src.core.errors import DatasetError
from src.core.io import from_uint8, load_image, load_labels
from src.core.types import Image, SegmentationMap

Layout = Literal["auto", "synthetic", "cityscapes"]

_CS_IMAGE_SUFFIX = "_leftImg8bit.png"
_CS_LABEL_SUFFIX = "_gtFine_labelIds.png"


@dataclass(frozen=True)
class DatasetEntry:
    image_id: str
    image_path: Path
    annotation_path: Path
    split: str


@dataclass
class DatasetManifest:
    """Validated list of dataset entries sharing one size and class count."""

    root: Path
    layout: str
    n_classes: int
    entries: list[DatasetEntry] = field(default_factory=list)
    height: Optional[int] = None
    width: Optional[int] = None
    resize: Optional[tuple[int, int]] = None
    skipped: list[tuple[Path, str]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def split(self, tag: Optional[str]) -> list[DatasetEntry]:
        """Entries of one split; all entries when ``tag`` is None."""
        if tag is None:
            return list(self.entries)
        return [e for e in self.entries if e.split == tag]

    def load(self, entry: DatasetEntry) -> tuple[Image, SegmentationMap]:
        """Read an entry as (image, label map), resized when the manifest says so."""
        if self.resize is None:
            return load_image(entry.image_path), load_labels(entry.annotation_path, self.n_classes)
        h, w = self.resize
        with PILImage.open(entry.image_path) as pil:
            rgb = np.asarray(pil.convert("RGB").resize((w, h), PILImage.Resampling.BOX), dtype=np.uint8)
        with PILImage.open(entry.annotation_path) as pil:
            labels = np.asarray(pil.resize((w, h), PILImage.Resampling.NEAREST), dtype=np.uint8)
        return Image(from_uint8(rgb)), SegmentationMap(labels, self.n_classes)

    def samples(self, tag: Optional[str] = None) -> list[tuple[str, Image, SegmentationMap]]:
        return [(e.image_id, *self.load(e)) for e in self.split(tag)]

    def to_frame(self) -> pl.DataFrame:
        return pl.DataFrame(
            {
                'image_id': [e.image_id for e in self.entries],
                'split': [e.split for e in self.entries],
                'image_path': [str(e.image_path) for e in self.entries],
                'annotation_path': [str(e.annotation_path) for e in self.entries],
            },
            schema={'image_id': pl.Utf8, 'split': pl.Utf8, 'image_path': pl.Utf8, 'annotation_path': pl.Utf8},
        )


def detect_layout(root: Path) -> str:
    if (root / "leftImg8bit").is_dir():
        return "cityscapes"
    if (root / "images").is_dir() or (root / "classes.json").exists():
        return "synthetic"
    raise DatasetError(f"Cannot recognise the dataset layout under {root}")


def _synthetic_pairs(root: Path) -> tuple[list[tuple[str, Path, Path, str]], list[tuple[Path, str]]]:
    pairs, missing = [], []
    images_dir = root / "images"
    if not images_dir.is_dir():
        return pairs, missing
    for image_path in sorted(images_dir.glob("*/*.png")):
        split = image_path.parent.name
        label_path = root / "labels" / split / image_path.name
        if label_path.exists():
            pairs.append((image_path.stem, image_path, label_path, split))
        else:
            missing.append((image_path, "missing annotation"))
    return pairs, missing


def _cityscapes_pairs(root: Path) -> tuple[list[tuple[str, Path, Path, str]], list[tuple[Path, str]]]:
    pairs, missing = [], []
    for image_path in sorted((root / "leftImg8bit").glob(f"*/*/*{_CS_IMAGE_SUFFIX}")):
        split, city = image_path.parent.parent.name, image_path.parent.name
        stem = image_path.name[: -len(_CS_IMAGE_SUFFIX)]
        label_path = root / "gtFine" / split / city / f"{stem}{_CS_LABEL_SUFFIX}"
        if label_path.exists():
            pairs.append((stem, image_path, label_path, split))
        else:
            missing.append((image_path, "missing annotation"))
    return pairs, missing


def _synthetic_classes(root: Path) -> int:
    meta_path = root / "classes.json"
    if not meta_path.exists():
        return SYNTHETIC_N_CLASSES
    try:
        return int(json.loads(meta_path.read_text())["n_classes"])
    except (KeyError, ValueError, TypeError) as e:
        raise DatasetError(f"Unreadable class description {meta_path}: {e}") from e


def ingest(
    root: str | Path,
    layout: Layout = "auto",
    factor: int = 4,
    resize: Optional[tuple[int, int]] = None,
) -> DatasetManifest:
    """
    Scan a dataset root into a validated manifest.

    Entries whose annotation is missing, whose size differs from their
    annotation or from the first entry, or whose sides are not multiples of
    ``factor`` are skipped and recorded in ``manifest.skipped``.

    Parameters:
    -----------
    root : Dataset root directory
    layout : 'synthetic', 'cityscapes' or 'auto' (detected from the directory tree)
    factor : Downscale factor the image sides must be divisible by
    resize : Optional (height, width) every entry is resized to on load

    Returns:
    --------
    DatasetManifest (possibly empty)

    Raises:
    -------
    DatasetError : If the root does not exist or its layout is not recognised
    """
    root = Path(root)
    if not root.is_dir():
        raise DatasetError(f"Dataset root not found: {root}")

    if layout == "auto":
        if not any(root.iterdir()):
            logger.warning(f"Dataset root {root} is empty; manifest has no entries")
            return DatasetManifest(root=root, layout="synthetic", n_classes=SYNTHETIC_N_CLASSES)
        layout = detect_layout(root)

    if layout == "synthetic":
        n_classes = _synthetic_classes(root)
        pairs, skipped = _synthetic_pairs(root)
    elif layout == "cityscapes":
        n_classes = CITYSCAPES_N_CLASSES
        pairs, skipped = _cityscapes_pairs(root)
    else:
        raise DatasetError(f"Unknown dataset layout: {layout}")

    total = len(pairs) + len(skipped)
    manifest = DatasetManifest(root=root, layout=layout, n_classes=n_classes, resize=resize, skipped=skipped)
    if resize is not None:
        if resize[0] % factor or resize[1] % factor:
            raise DatasetError(f"resize target {resize} is not divisible by factor {factor}")
        manifest.height, manifest.width = resize

    for image_id, image_path, label_path, split in pairs:
        reason = _check_entry(image_path, label_path, factor, manifest)
        if reason:
            manifest.skipped.append((image_path, reason))
            continue
        manifest.entries.append(DatasetEntry(image_id, image_path, label_path, split))

    if manifest.skipped:
        logger.warning(f"Skipped {len(manifest.skipped)} of {total} images under {root}")
    if not manifest.entries:
        logger.warning(f"No usable images under {root}; manifest is empty")
    else:
        logger.info(f"Ingested {len(manifest.entries)} images ({layout}) from {root}")
    return manifest


def _check_entry(image_path: Path, label_path: Path, factor: int, manifest: DatasetManifest) -> str | None:
    try:
        with PILImage.open(image_path) as pil:
            image_size = pil.size
        with PILImage.open(label_path) as pil:
            label_size, label_mode = pil.size, pil.mode
    except OSError as e:
        return f"unreadable: {e}"
    if label_mode not in ("L", "P"):
        return f"annotation is not single-channel ({label_mode})"
    if label_size != image_size:
        return f"annotation size {label_size} differs from image size {image_size}"
    if manifest.resize is not None:
        return None
    w, h = image_size
    if h % factor or w % factor:
        return f"size {w}x{h} is not divisible by factor {factor}"
    if manifest.height is None:
        manifest.height, manifest.width = h, w
    elif (h, w) != (manifest.height, manifest.width):
        return f"size {w}x{h} differs from the dataset size {manifest.width}x{manifest.height}"
    return None
