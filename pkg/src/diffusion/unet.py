"""Noise-prediction U-Net of the semantic-conditioned super-resolution model.

Input is six channels: the current noisy estimate and the upscaled coarse
image, both in [-1, 1]. The encoder path uses ordinary group-normalized
ResBlocks; every ResBlock of the bottleneck and of the decoder path
normalizes through :class:`~src.diffusion.spade.SPADE` driven by the one-hot
semantic map.
"""

import math

import torch
import torch.nn.functional as F
from torch import nn

from src.config.settings import DenoiserConfig
from src.diffusion.spade import SPADE, group_count, resize_onehot


def timestep_embedding(t: torch.Tensor, dim: int, max_period: float = 10000.0) -> torch.Tensor:
    """Sinusoidal embedding of (B,) timesteps into (B, dim) features."""
    half = dim // 2
    freqs = torch.exp(-math.log(max_period) * torch.arange(half, dtype=torch.float64, device=t.device) / half)
    args = t.to(torch.float64)[:, None] * freqs[None, :]
    emb = torch.cat([torch.cos(args), torch.sin(args)], dim=1)
    if dim % 2:
        emb = F.pad(emb, (0, 1))
    return emb


class ResBlock(nn.Module):
    """Two 3x3 convolutions with a timestep shift; SPADE norms when ``label_channels`` is set."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        time_dim: int,
        norm_groups: int,
        dropout: float = 0.0,
        label_channels: int | None = None,
        spade_hidden: int = 64,
    ):
        super().__init__()
        self.spade = label_channels is not None
        if self.spade:
            self.norm1 = SPADE(in_channels, label_channels, spade_hidden, norm_groups)
            self.norm2 = SPADE(out_channels, label_channels, spade_hidden, norm_groups)
        else:
            self.norm1 = nn.GroupNorm(group_count(in_channels, norm_groups), in_channels)
            self.norm2 = nn.GroupNorm(group_count(out_channels, norm_groups), out_channels)
        self.conv1 = nn.Conv2d(in_channels, out_channels, 3, padding=1)
        self.time_proj = nn.Linear(time_dim, out_channels)
        self.dropout = nn.Dropout(dropout)
        self.conv2 = nn.Conv2d(out_channels, out_channels, 3, padding=1)
        self.skip = (
            nn.Conv2d(in_channels, out_channels, 1) if in_channels != out_channels else nn.Identity()
        )

    def _norm(self, norm: nn.Module, h: torch.Tensor, segmap: torch.Tensor | None) -> torch.Tensor:
        if self.spade:
            if segmap is None:
                raise ValueError("SPADE ResBlock needs a semantic map")
            return norm(h, resize_onehot(segmap, tuple(h.shape[-2:])))
        return norm(h)

    def forward(self, x: torch.Tensor, temb: torch.Tensor, segmap: torch.Tensor | None = None) -> torch.Tensor:
        h = self.conv1(F.silu(self._norm(self.norm1, x, segmap)))
        h = h + self.time_proj(F.silu(temb))[:, :, None, None]
        h = self.conv2(self.dropout(F.silu(self._norm(self.norm2, h, segmap))))
        return self.skip(x) + h


class AttentionBlock(nn.Module):
    """Single-head spatial self-attention with a residual connection."""

    def __init__(self, channels: int, norm_groups: int):
        super().__init__()
        self.norm = nn.GroupNorm(group_count(channels, norm_groups), channels)
        self.qkv = nn.Conv2d(channels, 3 * channels, 1)
        self.proj = nn.Conv2d(channels, channels, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        b, c, h, w = x.shape
        q, k, v = self.qkv(self.norm(x)).reshape(b, 3, c, h * w).unbind(dim=1)
        weights = torch.softmax(torch.einsum("bci,bcj->bij", q, k) / math.sqrt(c), dim=-1)
        out = torch.einsum("bij,bcj->bci", weights, v).reshape(b, c, h, w)
        return x + self.proj(out)


class Downsample(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.conv = nn.Conv2d(channels, channels, 3, stride=2, padding=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.conv(x)


class Upsample(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.conv = nn.Conv2d(channels, channels, 3, padding=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.conv(F.interpolate(x, scale_factor=2, mode="nearest"))


class SemanticUNet(nn.Module):
    """Predicts the noise in channels 0-2 of a 6-channel input, given t and the one-hot map."""

    def __init__(self, config: DenoiserConfig, n_classes: int):
        super().__init__()
        self.config = config
        self.n_classes = n_classes
        base = config.base_channels
        groups = config.norm_groups
        self.embed_dim = base
        time_dim = config.time_embed_dim or 4 * base
        self.time_mlp = nn.Sequential(nn.Linear(base, time_dim), nn.SiLU(), nn.Linear(time_dim, time_dim))

        def res(cin: int, cout: int, semantic: bool) -> ResBlock:
            return ResBlock(
                cin,
                cout,
                time_dim,
                groups,
                config.dropout,
                label_channels=n_classes if semantic else None,
                spade_hidden=config.spade_hidden,
            )

        self.input_conv = nn.Conv2d(config.in_channels, base, 3, padding=1)
        last_level = len(config.channel_mult) - 1
        spade_at = set(config.spade_levels)

        ch = base
        skips = [ch]
        self.down = nn.ModuleList()
        for level, mult in enumerate(config.channel_mult):
            for _ in range(config.num_res_blocks):
                group = [res(ch, base * mult, semantic=False)]
                ch = base * mult
                if level in config.attention_levels:
                    group.append(AttentionBlock(ch, groups))
                self.down.append(nn.ModuleList(group))
                skips.append(ch)
            if level != last_level:
                self.down.append(nn.ModuleList([Downsample(ch)]))
                skips.append(ch)

        self.mid = nn.ModuleList(
            [
                res(ch, ch, semantic="bottleneck" in spade_at),
                AttentionBlock(ch, groups),
                res(ch, ch, semantic="bottleneck" in spade_at),
            ]
        )

        self.up = nn.ModuleList()
        for level, mult in reversed(list(enumerate(config.channel_mult))):
            for i in range(config.num_res_blocks + 1):
                group = [res(ch + skips.pop(), base * mult, semantic=f"decoder{level}" in spade_at)]
                ch = base * mult
                if level in config.attention_levels:
                    group.append(AttentionBlock(ch, groups))
                if level != 0 and i == config.num_res_blocks:
                    group.append(Upsample(ch))
                self.up.append(nn.ModuleList(group))

        self.out_norm = nn.GroupNorm(group_count(ch, groups), ch)
        self.out_conv = nn.Conv2d(ch, config.out_channels, 3, padding=1)
        if config.zero_init_output:
            nn.init.zeros_(self.out_conv.weight)
            nn.init.zeros_(self.out_conv.bias)

    @staticmethod
    def _run(layers: nn.ModuleList, h, temb, segmap):
        for layer in layers:
            h = layer(h, temb, segmap) if isinstance(layer, ResBlock) else layer(h)
        return h

    def forward(self, x: torch.Tensor, t: torch.Tensor, segmap: torch.Tensor) -> torch.Tensor:
        """
        Args:
            x: (B, 6, H, W) noisy channels followed by coarse conditioning channels.
            t: (B,) timesteps in [1, T].
            segmap: (B, n_classes, H, W) one-hot semantic map.

        Returns:
            (B, 3, H, W) predicted noise.
        """
        if x.ndim != 4 or x.shape[1] != self.config.in_channels:
            raise ValueError(f"expected (B, {self.config.in_channels}, H, W) input, got {tuple(x.shape)}")
        if segmap.shape[0] != x.shape[0] or segmap.shape[1] != self.n_classes:
            raise ValueError(
                f"expected ({x.shape[0]}, {self.n_classes}, H, W) semantic map, got {tuple(segmap.shape)}"
            )
        if segmap.shape[-2:] != x.shape[-2:]:
            raise ValueError("semantic map and input differ in spatial size")
        factor = self.config.downsample_factor
        if x.shape[-2] % factor or x.shape[-1] % factor:
            raise ValueError(f"input size {tuple(x.shape[-2:])} must be divisible by {factor}")

        segmap = segmap.to(x.dtype)
        temb = self.time_mlp(timestep_embedding(t, self.embed_dim).to(x.dtype))

        h = self.input_conv(x)
        hs = [h]
        for layers in self.down:
            h = self._run(layers, h, temb, segmap)
            hs.append(h)
        h = self._run(self.mid, h, temb, segmap)
        for layers in self.up:
            h = self._run(layers, torch.cat([h, hs.pop()], dim=1), temb, segmap)
        return self.out_conv(F.silu(self.out_norm(h)))
