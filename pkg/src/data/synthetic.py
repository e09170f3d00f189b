"""
Synthetic-shapes corpus: flat-coloured polygons on a textured grey background.

Each image comes with its exact label raster. Colours are the class
prototypes of :data:`~src.analysis.constants.SYNTHETIC_CLASS_COLORS`, so the
prototype segmenter recovers the annotation from the pixels.

Layout written::

    <root>/classes.json
    <root>/images/<split>/<image_id>.png
    <root>/labels/<split>/<image_id>.png
"""

import json
from pathlib import Path

import numpy as np
from loguru import logger
from PIL import Image as PILImage
from PIL import ImageDraw

from src.analysis.constants import (
    BACKGROUND_NOISE,
    SYNTHETIC_CLASS_COLORS,
    SYNTHETIC_CLASS_NAMES,
    SYNTHETIC_SIZE,
)
from src.core.io import save_image, save_labels
from src.core.types import Image, SegmentationMap

MIN_SHAPES = 3
MAX_SHAPES = 6


def _polygon(rng: np.random.Generator, height: int, width: int) -> list[tuple[float, float]]:
    n_vertices = int(rng.integers(3, 7))
    cy, cx = rng.uniform(0, height), rng.uniform(0, width)
    radius = rng.uniform(0.12, 0.35) * min(height, width)
    angles = np.sort(rng.uniform(0, 2 * np.pi, n_vertices))
    radii = radius * rng.uniform(0.6, 1.0, n_vertices)
    return [(float(cx + r * np.cos(a)), float(cy + r * np.sin(a))) for a, r in zip(angles, radii)]


def render_sample(
    rng: np.random.Generator, size: tuple[int, int] = SYNTHETIC_SIZE
) -> tuple[Image, SegmentationMap]:
    """Draw one image and its label map."""
    height, width = size
    n_classes = len(SYNTHETIC_CLASS_COLORS)
    canvas = PILImage.new("L", (width, height), 0)
    draw = ImageDraw.Draw(canvas)
    for _ in range(int(rng.integers(MIN_SHAPES, MAX_SHAPES + 1))):
        draw.polygon(_polygon(rng, height, width), fill=int(rng.integers(1, n_classes)))
    labels = np.asarray(canvas, dtype=np.uint8)

    colors = np.asarray(SYNTHETIC_CLASS_COLORS, dtype=np.float64)
    pixels = colors[labels]
    background = labels == 0
    noise = rng.uniform(-BACKGROUND_NOISE, BACKGROUND_NOISE, size=(height, width, 3))
    pixels[background] += noise[background]
    return Image(np.clip(pixels, 0.0, 1.0)), SegmentationMap(labels, n_classes)


def make_synthetic(
    out_dir: str | Path,
    n_train: int = 64,
    n_val: int = 16,
    seed: int = 0,
    size: tuple[int, int] = SYNTHETIC_SIZE,
) -> Path:
    """
    Write a synthetic-shapes corpus with train and val splits.

    Parameters:
    -----------
    out_dir : Corpus root (created if missing)
    n_train : Number of training images
    n_val : Number of validation images
    seed : Seed of the generator; equal seeds give identical corpora
    size : (height, width) of every image

    Returns:
    --------
    Path to the corpus root
    """
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    for split, count in (("train", n_train), ("val", n_val)):
        for i in range(count):
            x, s = render_sample(rng, size)
            image_id = f"{split}_{i:04d}"
            save_image(x, root / "images" / split / f"{image_id}.png")
            save_labels(s, root / "labels" / split / f"{image_id}.png")

    meta = {
        "layout": "synthetic",
        "n_classes": len(SYNTHETIC_CLASS_NAMES),
        "classes": SYNTHETIC_CLASS_NAMES,
        "colors": SYNTHETIC_CLASS_COLORS,
        "size": list(size),
        "seed": seed,
    }
    (root / "classes.json").write_text(json.dumps(meta, indent=2))
    logger.success(f"Synthetic corpus written: {root} ({n_train} train, {n_val} val)")
    return root
