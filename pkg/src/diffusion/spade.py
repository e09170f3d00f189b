"""Spatially-adaptive normalization driven by the one-hot semantic map."""

import math

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from src.core.types import OneHotMap


def group_count(channels: int, max_groups: int) -> int:
    """Largest group count <= ``max_groups`` that divides ``channels``."""
    return math.gcd(channels, max_groups)


class SPADE(nn.Module):
    """Parameter-free group normalization modulated by ``(1 + gamma(s)) * x + beta(s)``.

    The label transform uses replicate padding, so a single-class map yields
    spatially constant gamma and beta.
    """

    def __init__(
        self,
        norm_channels: int,
        label_channels: int,
        hidden: int = 64,
        norm_groups: int = 32,
        kernel_size: int = 3,
    ):
        super().__init__()
        self.label_channels = label_channels
        self.param_free_norm = nn.GroupNorm(group_count(norm_channels, norm_groups), norm_channels, affine=False)
        pw = kernel_size // 2
        self.mlp_shared = nn.Sequential(
            nn.Conv2d(label_channels, hidden, kernel_size, padding=pw, padding_mode="replicate"),
            nn.ReLU(),
        )
        self.mlp_gamma = nn.Conv2d(hidden, norm_channels, kernel_size, padding=pw, padding_mode="replicate")
        self.mlp_beta = nn.Conv2d(hidden, norm_channels, kernel_size, padding=pw, padding_mode="replicate")

    def modulation(self, segmap: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """(gamma, beta) maps for a one-hot ``segmap`` of shape (B, n_classes, H, W)."""
        actv = self.mlp_shared(segmap)
        return self.mlp_gamma(actv), self.mlp_beta(actv)

    def forward(self, x: torch.Tensor, segmap: torch.Tensor) -> torch.Tensor:
        if segmap.shape[1] != self.label_channels:
            raise ValueError(f"expected {self.label_channels} label planes, got {segmap.shape[1]}")
        if segmap.shape[-2:] != x.shape[-2:]:
            raise ValueError(
                f"label map {tuple(segmap.shape[-2:])} does not match features {tuple(x.shape[-2:])}"
            )
        normalized = self.param_free_norm(x)
        gamma, beta = self.modulation(segmap.to(x.dtype))
        return normalized * (1 + gamma) + beta


def onehot_tensor(s: OneHotMap, dtype: torch.dtype = torch.float32, device=None) -> torch.Tensor:
    """(1, n_classes, H, W) float tensor of a one-hot map."""
    return torch.as_tensor(np.asarray(s.planes), dtype=dtype, device=device).unsqueeze(0)


def spade_modulate(block: SPADE, features: torch.Tensor, s_onehot: OneHotMap | torch.Tensor) -> torch.Tensor:
    """Apply ``block`` to (B, C, H, W) features; the map must already match their size."""
    segmap = s_onehot
    if isinstance(s_onehot, OneHotMap):
        segmap = onehot_tensor(s_onehot, features.dtype, features.device)
    if segmap.shape[0] != features.shape[0]:
        segmap = segmap.expand(features.shape[0], *segmap.shape[1:])
    return block(features, segmap)


def resize_onehot(segmap: torch.Tensor, size: tuple[int, int]) -> torch.Tensor:
    """Nearest-neighbour resize of one-hot planes (same sampling rule as label resizing)."""
    if tuple(segmap.shape[-2:]) == tuple(size):
        return segmap
    return F.interpolate(segmap, size=size, mode="nearest")
