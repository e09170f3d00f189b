"""
Feature extractors for distribution-level image comparison.

Any object with ``name``, ``d`` and ``__call__(Image) -> (d,) array`` can be
used. The bundled extractor is a frozen convolutional network with seeded
random weights, so feature statistics are reproducible without downloading
pretrained weights.
"""

from collections.abc import Iterable
from typing import Protocol, runtime_checkable

import numpy as np
import torch
from torch import nn

from src.analysis.metrics import FeatureStatistics, feature_stats, fid
from src.core.types import Image


@runtime_checkable
class FeatureExtractorInterface(Protocol):
    name: str
    d: int

    def __call__(self, x: Image) -> np.ndarray: ...


class RandomConvFeatureExtractor:
    """Three strided conv layers with fixed random weights, global-average pooled."""

    def __init__(self, d: int = 64, seed: int = 0, width: int = 32):
        self.d = d
        self.seed = seed
        self.name = f"random-conv-{d}-s{seed}"
        self.net = nn.Sequential(
            nn.Conv2d(3, width, 3, stride=2, padding=1),
            nn.ReLU(),
            nn.Conv2d(width, 2 * width, 3, stride=2, padding=1),
            nn.ReLU(),
            nn.Conv2d(2 * width, d, 3, stride=2, padding=1),
            nn.ReLU(),
            nn.AdaptiveAvgPool2d(1),
            nn.Flatten(),
        ).to(torch.float64)
        generator = torch.Generator().manual_seed(seed)
        with torch.no_grad():
            for module in self.net:
                if isinstance(module, nn.Conv2d):
                    fan_in = module.in_channels * module.kernel_size[0] * module.kernel_size[1]
                    std = float(np.sqrt(2.0 / fan_in))
                    module.weight.copy_(torch.randn(module.weight.shape, generator=generator, dtype=torch.float64) * std)
                    module.bias.zero_()
        self.net.eval()
        self.net.requires_grad_(False)

    @torch.no_grad()
    def __call__(self, x: Image) -> np.ndarray:
        batch = torch.as_tensor(np.ascontiguousarray(x.pixels.transpose(2, 0, 1)), dtype=torch.float64)
        return self.net(batch.unsqueeze(0) * 2.0 - 1.0)[0].numpy()


def extract_features(images: Iterable[Image], extractor: FeatureExtractorInterface) -> np.ndarray:
    """(n, d) feature matrix of ``images``."""
    rows = [np.asarray(extractor(x), dtype=np.float64) for x in images]
    if not rows:
        return np.empty((0, extractor.d))
    return np.stack(rows)


def image_stats(images: Iterable[Image], extractor: FeatureExtractorInterface) -> FeatureStatistics:
    return feature_stats(extract_features(images, extractor))


def fid_from_images(
    a: Iterable[Image], b: Iterable[Image], extractor: FeatureExtractorInterface
) -> float:
    """FID between two image sets (each needs at least two images)."""
    return fid(image_stats(a, extractor), image_stats(b, extractor))
