"""Training loss and reverse sampling of the semantic-conditioned diffusion decoder."""

import math
from collections.abc import Callable

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from src.config.settings import SamplerConfig
from src.core.labels import one_hot
from src.core.ranges import from_model_range, to_model_range
from src.core.types import CoarseImage, Image, SegmentationMap
from src.diffusion.schedule import NoiseSchedule, q_sample, step_pairs
from src.encoder.scaling import upscale_coarse

StepCallback = Callable[[int, int, torch.Tensor], None]


def to_chw(pixels: np.ndarray, dtype: torch.dtype = torch.float32, device=None) -> torch.Tensor:
    """(H, W, 3) array -> (3, H, W) tensor."""
    return torch.as_tensor(np.ascontiguousarray(pixels.transpose(2, 0, 1)), dtype=dtype, device=device)


def from_chw(x: torch.Tensor) -> np.ndarray:
    return x.detach().to("cpu", torch.float64).numpy().transpose(1, 2, 0)


def coarse_condition(c: CoarseImage, factor: int) -> np.ndarray:
    """Upscaled coarse image in model range, (H, W, 3)."""
    return to_model_range(upscale_coarse(c, factor)).pixels


def denoise_step_input(x_t, c: CoarseImage | torch.Tensor | np.ndarray, factor: int = 4):
    """Stack the current estimate and the coarse conditioning into 6 channels.

    ``x_t`` is (3, H, W) or (B, 3, H, W), numpy or torch. ``c`` is either the
    decoded coarse image (upscaled and range-mapped here) or an already
    prepared conditioning array of the same shape as ``x_t``.
    """
    if isinstance(c, CoarseImage):
        cond = coarse_condition(c, factor).transpose(2, 0, 1)
        if isinstance(x_t, torch.Tensor):
            cond = torch.as_tensor(cond, dtype=x_t.dtype, device=x_t.device)
            if x_t.ndim == 4:
                cond = cond.unsqueeze(0).expand(x_t.shape[0], -1, -1, -1)
        elif x_t.ndim == 4:
            cond = np.broadcast_to(cond, x_t.shape)
    else:
        cond = c
    if tuple(cond.shape) != tuple(x_t.shape) or x_t.shape[-3] != 3:
        raise ValueError(
            f"conditioning {tuple(cond.shape)} does not match the estimate {tuple(x_t.shape)}"
        )
    if isinstance(x_t, torch.Tensor):
        return torch.cat([x_t, cond], dim=-3)
    return np.concatenate([x_t, cond], axis=-3)


def onehot_batch(s: SegmentationMap, dtype: torch.dtype = torch.float32, device=None) -> torch.Tensor:
    return torch.as_tensor(one_hot(s).planes, dtype=dtype, device=device).unsqueeze(0)


class GaussianDiffusion(nn.Module):
    """Epsilon-prediction DDPM around a conditional noise-prediction network.

    The network is called as ``model(x6, t, segmap)`` with ``x6`` the 6-channel
    input, ``t`` a (B,) tensor of 1-based timesteps and ``segmap`` the one-hot
    semantic map at input resolution.
    """

    def __init__(self, model: nn.Module, schedule: NoiseSchedule, factor: int = 4):
        super().__init__()
        self.model = model
        self.schedule = schedule
        self.factor = factor

    @property
    def dtype(self) -> torch.dtype:
        return next(self.model.parameters()).dtype

    @property
    def device(self) -> torch.device:
        return next(self.model.parameters()).device

    def predict_eps(self, x_t: torch.Tensor, t: torch.Tensor, cond: torch.Tensor, segmap: torch.Tensor):
        return self.model(denoise_step_input(x_t, cond), t, segmap)

    # ------------------------------------------------------------------
    # Training
    # ------------------------------------------------------------------
    def loss(
        self,
        x0: torch.Tensor,
        cond: torch.Tensor,
        segmap: torch.Tensor,
        generator: torch.Generator | None = None,
    ) -> torch.Tensor:
        """Mean squared error between true and predicted noise for a batch.

        All tensors are in model range: ``x0`` and ``cond`` (B, 3, H, W),
        ``segmap`` (B, n_classes, H, W). t is drawn uniformly from [1, T].
        """
        b = x0.shape[0]
        t = torch.randint(1, self.schedule.T + 1, (b,), generator=generator, device="cpu").to(x0.device)
        eps = torch.randn(x0.shape, generator=generator, dtype=x0.dtype, device="cpu").to(x0.device)
        x_t = q_sample(x0, t, eps, self.schedule)
        return F.mse_loss(self.predict_eps(x_t, t, cond, segmap), eps)

    def training_step(
        self, x0: Image, c: CoarseImage, s: SegmentationMap, generator: torch.Generator | None = None
    ) -> torch.Tensor:
        """Loss for a single (image, decoded coarse, map) triple; backward is left to the caller."""
        if s.size != x0.size:
            raise ValueError(f"map {s.size} does not match image {x0.size}")
        dtype, device = self.dtype, self.device
        x = to_chw(to_model_range(x0).pixels, dtype, device).unsqueeze(0)
        cond = to_chw(coarse_condition(c, self.factor), dtype, device).unsqueeze(0)
        return self.loss(x, cond, onehot_batch(s, dtype, device), generator)

    # ------------------------------------------------------------------
    # Sampling
    # ------------------------------------------------------------------
    @torch.no_grad()
    def p_sample_step(
        self,
        x_t: torch.Tensor,
        t_pair: tuple[int, int],
        cond: torch.Tensor,
        segmap: torch.Tensor,
        generator: torch.Generator | None = None,
        clip_denoised: bool = True,
    ) -> torch.Tensor:
        """One ancestral update from step ``t`` to ``t_prev`` (which may skip steps).

        No noise is added when ``t_prev`` is 0, so the final step is deterministic.
        """
        t, t_prev = t_pair
        if not self.schedule.T >= t > t_prev >= 0:
            raise ValueError(f"need T >= t > t_prev >= 0, got {t_pair}")
        ab_t = self.schedule.alpha_bar_at(t)
        ab_prev = self.schedule.alpha_bar_at(t_prev)

        tt = torch.full((x_t.shape[0],), t, dtype=torch.long, device=x_t.device)
        eps = self.predict_eps(x_t, tt, cond, segmap)
        x0_hat = (x_t - math.sqrt(1.0 - ab_t) * eps) / math.sqrt(ab_t)
        if clip_denoised:
            x0_hat = x0_hat.clamp(-1.0, 1.0)

        beta = 1.0 - ab_t / ab_prev
        coef_x0 = math.sqrt(ab_prev) * beta / (1.0 - ab_t)
        coef_xt = math.sqrt(1.0 - beta) * (1.0 - ab_prev) / (1.0 - ab_t)
        mean = coef_x0 * x0_hat + coef_xt * x_t
        if t_prev == 0:
            return mean
        var = beta * (1.0 - ab_prev) / (1.0 - ab_t)
        noise = torch.randn(x_t.shape, generator=generator, dtype=x_t.dtype, device="cpu").to(x_t.device)
        return mean + math.sqrt(var) * noise

    @torch.no_grad()
    def sample(
        self,
        c: CoarseImage,
        s: SegmentationMap,
        cfg: SamplerConfig,
        callback: StepCallback | None = None,
    ) -> Image:
        """Reconstruct the full-resolution image from the decoded coarse image and map.

        ``callback(step_index, t, model_input)`` is invoked before every
        network evaluation with the 6-channel input.
        """
        dtype, device = self.dtype, self.device
        h, w = c.height * self.factor, c.width * self.factor
        if s.size != (h, w):
            raise ValueError(f"map {s.size} does not match the {self.factor}x upscaled coarse size {(h, w)}")
        generator = torch.Generator().manual_seed(cfg.seed)

        cond = to_chw(coarse_condition(c, self.factor), dtype, device).unsqueeze(0)
        segmap = onehot_batch(s, dtype, device)
        pairs = step_pairs(self.schedule.T, cfg.steps)

        if cfg.init_mode == "coarse":
            x = cond.clone()
        else:
            eps = torch.randn(cond.shape, generator=generator, dtype=dtype, device="cpu").to(device)
            if cfg.init_mode == "noise":
                x = eps
            else:
                t0 = torch.tensor([pairs[0][0]], device=device)
                x = q_sample(cond, t0, eps, self.schedule)

        was_training = self.model.training
        self.model.eval()
        try:
            for i, (t, t_prev) in enumerate(pairs):
                if callback is not None:
                    callback(i, t, denoise_step_input(x, cond))
                x = self.p_sample_step(x, (t, t_prev), cond, segmap, generator, cfg.clip_denoised)
        finally:
            self.model.train(was_training)
        return from_model_range(from_chw(x[0]))
