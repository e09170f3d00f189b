"""
Analysis constants for semantic image coding experiments.

This module contains the class palettes, result-table schema and method
groupings shared by the synthetic corpus, the toy segmenter, the sweep and
the plots.

These are experimental-protocol decisions, not visualization settings.
"""

# ============================================================
# Synthetic-Shapes Classes
# ============================================================
# Class 0 is the textured background; 1-4 are flat-coloured polygons.

SYNTHETIC_CLASS_NAMES = [
    'background',
    'red',
    'green',
    'blue',
    'yellow',
]

# RGB prototype of each class in [0, 1]
SYNTHETIC_CLASS_COLORS = [
    (0.5, 0.5, 0.5),
    (0.85, 0.2, 0.2),
    (0.2, 0.75, 0.25),
    (0.2, 0.3, 0.85),
    (0.9, 0.8, 0.2),
]

SYNTHETIC_N_CLASSES = len(SYNTHETIC_CLASS_NAMES)

# Full-resolution size of synthetic images (height, width)
SYNTHETIC_SIZE = (64, 128)

# Background texture: uniform noise amplitude around the grey prototype
BACKGROUND_NOISE = 0.06


# ============================================================
# Cityscapes
# ============================================================
# gtFine *_labelIds.png rasters use ids 0..33 (-1 only in *_labelTrainIds)

CITYSCAPES_N_CLASSES = 34


# ============================================================
# Result Table Schema
# ============================================================
# One row per (image, method, quality); written by the sweep, read by plots.

RESULT_COLUMNS = [
    'image_id',
    'method',
    'quality',
    'bpp_total',
    'bpp_ssm',
    'bpp_coarse',
    'bpp_header',
    'miou',
    'miou_dataset',
    'fid_batch',
    'psnr',
    'status',
]

STATUS_OK = 'ok'
STATUS_UNAVAILABLE = 'unavailable'
STATUS_FAILED = 'failed'


# ============================================================
# Methods
# ============================================================
# spic: diffusion reconstruction from (SSM, coarse)
# coarse_bilinear: same bitstream, bilinear upscaling of the coarse image
# reference_dct / bpg: full-image classical codecs (baseline curves)

METHOD_ORDER = [
    'spic',
    'coarse_bilinear',
    'reference_dct',
    'bpg',
]

# Methods whose bitstream carries the SSM
SEMANTIC_METHODS = ['spic', 'coarse_bilinear']

METHOD_COLORS = {
    'spic': '#2563eb',             # Blue
    'coarse_bilinear': '#9333ea',  # Purple
    'reference_dct': '#16a34a',    # Green
    'bpg': '#db2777',              # Magenta
}

METHOD_LABELS = {
    'spic': 'SPIC (diffusion)',
    'coarse_bilinear': 'Coarse + bilinear',
    'reference_dct': 'Reference DCT',
    'bpg': 'BPG',
}

# Average Cityscapes SSM rate reported for FLIF at 256x512; drawn as a reference line on charts
REFERENCE_SSM_BPP = 0.112
