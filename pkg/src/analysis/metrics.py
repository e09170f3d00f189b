"""
Evaluation metrics for semantic image coding.

This module provides the semantic-fidelity score (per-class IoU and mIoU,
accumulated over a dataset through a confusion matrix), the Frechet
distance between Gaussian fits of feature distributions, and PSNR.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from loguru import logger
from scipy import linalg

from src.core.errors import InvalidImageError
from src.core.types import Image, SegmentationMap

# Eigenvalues of a PSD product above this negative bound are rounding noise.
EIGEN_TOLERANCE = 1e-8


def _check_pair(s1: SegmentationMap, s2: SegmentationMap) -> None:
    if s1.size != s2.size:
        raise InvalidImageError(f"label maps differ in size: {s1.size} vs {s2.size}")
    if s1.n_classes != s2.n_classes:
        raise InvalidImageError(f"label maps differ in class count: {s1.n_classes} vs {s2.n_classes}")


def confusion_matrix(s1: SegmentationMap, s2: SegmentationMap) -> np.ndarray:
    """
    Joint label histogram of two maps.

    Returns:
    --------
    (n_c, n_c) int64 matrix, entry [i, j] counts pixels labelled i in s1 and j in s2
    """
    _check_pair(s1, s2)
    n = s1.n_classes
    flat = s1.labels.ravel().astype(np.int64) * n + s2.labels.ravel()
    return np.bincount(flat, minlength=n * n).reshape(n, n)


def iou_class(s1: SegmentationMap, s2: SegmentationMap, k: int) -> float | None:
    """
    Intersection over union of class ``k`` between two maps.

    Parameters:
    -----------
    s1, s2 : Label maps of equal size and class count
    k : Class index

    Returns:
    --------
    IoU in [0, 1], or None when neither map contains class k
    """
    _check_pair(s1, s2)
    if not 0 <= k < s1.n_classes:
        raise ValueError(f"class {k} outside [0, {s1.n_classes})")
    a = s1.labels == k
    b = s2.labels == k
    union = int(np.count_nonzero(a | b))
    if union == 0:
        return None
    return int(np.count_nonzero(a & b)) / union


@dataclass(frozen=True, eq=False)
class ConfusionAccumulator:
    """Per-class intersection and union pixel counts, additive across image pairs."""

    n_classes: int
    intersection: np.ndarray = field(default=None)
    union: np.ndarray = field(default=None)

    def __post_init__(self) -> None:
        for name in ("intersection", "union"):
            value = getattr(self, name)
            value = np.zeros(self.n_classes, dtype=np.int64) if value is None else np.array(value, dtype=np.int64)
            if value.shape != (self.n_classes,) or value.min(initial=0) < 0:
                raise ValueError(f"{name} must hold {self.n_classes} non-negative counts")
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        if np.any(self.intersection > self.union):
            raise ValueError("intersection exceeds union for some class")

    def add(self, s1: SegmentationMap, s2: SegmentationMap) -> "ConfusionAccumulator":
        """New accumulator with the counts of one more map pair."""
        if s1.n_classes != self.n_classes:
            raise InvalidImageError(f"accumulator has {self.n_classes} classes, maps have {s1.n_classes}")
        cm = confusion_matrix(s1, s2)
        inter = np.diag(cm)
        union = cm.sum(axis=0) + cm.sum(axis=1) - inter
        return ConfusionAccumulator(self.n_classes, self.intersection + inter, self.union + union)

    def merge(self, other: "ConfusionAccumulator") -> "ConfusionAccumulator":
        if other.n_classes != self.n_classes:
            raise ValueError(f"cannot merge accumulators of {self.n_classes} and {other.n_classes} classes")
        return ConfusionAccumulator(
            self.n_classes, self.intersection + other.intersection, self.union + other.union
        )

    def per_class_iou(self) -> np.ndarray:
        """IoU per class, NaN where the union is empty."""
        iou = np.full(self.n_classes, np.nan)
        present = self.union > 0
        iou[present] = self.intersection[present] / self.union[present]
        return iou

    def miou(self) -> float:
        """Mean IoU over classes with a non-empty union."""
        present = self.union > 0
        if not present.any():
            raise ValueError("no class occurs in either map; mIoU is undefined")
        return float(np.mean(self.intersection[present] / self.union[present]))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ConfusionAccumulator):
            return NotImplemented
        return (
            self.n_classes == other.n_classes
            and np.array_equal(self.intersection, other.intersection)
            and np.array_equal(self.union, other.union)
        )

    __hash__ = None


def accumulate(acc: ConfusionAccumulator, s1: SegmentationMap, s2: SegmentationMap) -> ConfusionAccumulator:
    return acc.add(s1, s2)


def miou(s1: SegmentationMap, s2: SegmentationMap, n_c: int | None = None) -> float:
    """
    Mean IoU of two maps; classes absent from both are left out of the average.

    Parameters:
    -----------
    s1, s2 : Label maps of equal size
    n_c : Class count (defaults to the maps' own)

    Raises:
    -------
    ValueError : If no class occurs in either map
    """
    if n_c is not None and n_c != s1.n_classes:
        raise InvalidImageError(f"maps have {s1.n_classes} classes, n_c={n_c} given")
    return ConfusionAccumulator(s1.n_classes).add(s1, s2).miou()


# ============================================================
# Frechet distance
# ============================================================

@dataclass(frozen=True, eq=False)
class FeatureStatistics:
    """Gaussian fit of a feature distribution: mean, covariance, sample count."""

    mu: np.ndarray
    sigma: np.ndarray
    n: int

    def __post_init__(self) -> None:
        mu = np.asarray(self.mu, dtype=np.float64)
        sigma = np.asarray(self.sigma, dtype=np.float64)
        if mu.ndim != 1 or sigma.shape != (mu.size, mu.size):
            raise ValueError(f"need mu (d,) and sigma (d, d), got {mu.shape} and {sigma.shape}")
        if self.n < 2:
            raise ValueError(f"feature statistics need at least 2 samples, got {self.n}")
        if not np.allclose(sigma, sigma.T, rtol=0.0, atol=1e-10):
            raise ValueError("covariance matrix is not symmetric")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    @property
    def d(self) -> int:
        return int(self.mu.size)


def feature_stats(features: np.ndarray) -> FeatureStatistics:
    """
    Sample mean and unbiased covariance of ``features``.

    Parameters:
    -----------
    features : (n, d) array, one feature vector per row, n >= 2
    """
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim != 2:
        raise ValueError(f"features must be a 2-D (n, d) array, got shape {feats.shape}")
    n = feats.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 feature vectors, got {n}")
    sigma = np.atleast_2d(np.cov(feats, rowvar=False, ddof=1))
    return FeatureStatistics(mu=feats.mean(axis=0), sigma=(sigma + sigma.T) / 2.0, n=n)


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = linalg.eigh(m)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


def fid(a: FeatureStatistics, b: FeatureStatistics) -> float:
    """
    Frechet distance between two Gaussian feature fits.

    ||mu_a - mu_b||^2 + Tr(Sigma_a + Sigma_b - 2 (Sigma_a Sigma_b)^(1/2)), with the
    trace of the square root taken from the eigenvalues of the symmetric
    product Sigma_a^(1/2) Sigma_b Sigma_a^(1/2).

    Raises:
    -------
    ValueError : If dimensions differ or the statistics are not finite
    """
    if a.d != b.d:
        raise ValueError(f"feature dimensions differ: {a.d} vs {b.d}")
    for stats in (a, b):
        if not (np.all(np.isfinite(stats.mu)) and np.all(np.isfinite(stats.sigma))):
            raise ValueError("feature statistics contain non-finite values")

    root_a = _psd_sqrt(a.sigma)
    product = root_a @ b.sigma @ root_a
    eig = linalg.eigvalsh((product + product.T) / 2.0)
    if eig.min(initial=0.0) < -EIGEN_TOLERANCE * max(1.0, float(np.abs(eig).max(initial=0.0))):
        logger.warning(f"covariance product has a negative eigenvalue {eig.min():.3g}; clamped to 0")
    tr_covmean = float(np.sum(np.sqrt(np.clip(eig, 0.0, None))))

    diff = a.mu - b.mu
    value = float(diff @ diff + np.trace(a.sigma) + np.trace(b.sigma) - 2.0 * tr_covmean)
    return max(value, 0.0)


def psnr(x: Image, y: Image) -> float:
    """
    Peak signal-to-noise ratio in dB for [0, 1] images.

    Returns:
    --------
    10 * log10(1 / MSE), or math.inf when the images are identical
    """
    if x.size != y.size:
        raise InvalidImageError(f"images differ in size: {x.size} vs {y.size}")
    mse = float(np.mean((x.pixels - y.pixels) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)
