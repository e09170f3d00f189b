"""Epsilon-prediction training of the semantic-conditioned diffusion decoder.

The conditioning channels hold the coarse image as the receiver sees it:
downscaled, coded with the lossy codec at ``train_quality``, decoded and
upscaled. Samples are prepared once when the dataset is built.
"""

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import torch
from loguru import logger
from torch.optim.swa_utils import AveragedModel, get_ema_multi_avg_fn
from torch.utils.data import DataLoader, Dataset

from src.config.settings import DenoiserConfig, ScheduleConfig, TrainConfig
from src.core.labels import one_hot
from src.core.ranges import to_model_range
from src.core.types import CoarseImage, Image, SegmentationMap
from src.diffusion.checkpoint import save_checkpoint
from src.diffusion.gaussian import GaussianDiffusion, coarse_condition, to_chw
from src.encoder.codecs import decode_lossy, encode_lossy
from src.encoder.scaling import downscale_average
from src.utils.logger import log_training_progress


def degraded_coarse(x: Image, factor: int, quality: int, codec_id: int = 0) -> CoarseImage:
    """The decoded coarse image a receiver would get for ``x``."""
    c = downscale_average(x, factor)
    payload = encode_lossy(c.pixels, quality, codec_id)
    return CoarseImage(decode_lossy(payload, c.height, c.width, quality, codec_id))


class SemanticSRDataset(Dataset):
    """(x0, coarse conditioning, one-hot map) tensors in model range."""

    def __init__(
        self,
        samples: Sequence[tuple[Image, SegmentationMap]],
        factor: int,
        quality: int,
        codec_id: int = 0,
    ):
        if not samples:
            raise ValueError("training set is empty")
        self.items = []
        for x, s in samples:
            if s.size != x.size:
                raise ValueError(f"map {s.size} does not match image {x.size}")
            c = degraded_coarse(x, factor, quality, codec_id)
            self.items.append(
                (
                    to_chw(to_model_range(x).pixels),
                    to_chw(coarse_condition(c, factor)),
                    torch.as_tensor(one_hot(s).planes, dtype=torch.float32),
                )
            )
        logger.debug(f"Prepared {len(self.items)} training samples at quality {quality}")

    def __len__(self) -> int:
        return len(self.items)

    def __getitem__(self, index: int):
        return self.items[index]


@dataclass
class TrainingHistory:
    losses: list[float] = field(default_factory=list)
    smoothed: list[float] = field(default_factory=list)

    def reduction(self, from_step: int = 50) -> float:
        """Relative drop of the smoothed loss between ``from_step`` and the last step."""
        if len(self.smoothed) < from_step:
            raise ValueError(f"only {len(self.smoothed)} steps recorded, need {from_step}")
        ref = self.smoothed[from_step - 1]
        return 1.0 - self.smoothed[-1] / ref


class Trainer:
    """Runs ``cfg.steps`` AdamW updates over a :class:`SemanticSRDataset`."""

    def __init__(
        self,
        diffusion: GaussianDiffusion,
        cfg: TrainConfig,
        seed: int = 0,
        num_workers: int = 0,
    ):
        self.diffusion = diffusion
        self.cfg = cfg
        self.seed = seed
        self.num_workers = num_workers
        self.generator = torch.Generator().manual_seed(seed)
        self.optimizer = torch.optim.AdamW(diffusion.model.parameters(), lr=cfg.learning_rate)
        self.ema = (
            AveragedModel(diffusion.model, multi_avg_fn=get_ema_multi_avg_fn(cfg.ema_decay))
            if cfg.ema_decay > 0
            else None
        )

    def ema_state(self) -> dict[str, torch.Tensor] | None:
        return self.ema.module.state_dict() if self.ema is not None else None

    def fit(
        self,
        dataset: SemanticSRDataset,
        checkpoint_path: str | Path | None = None,
        denoiser_cfg: DenoiserConfig | None = None,
        schedule_cfg: ScheduleConfig | None = None,
        on_step: Callable[[int, float, float], None] | None = None,
    ) -> TrainingHistory:
        """Train and return per-step raw and smoothed losses.

        Checkpoints are written every ``checkpoint_every`` steps and at the end
        when ``checkpoint_path`` and both configs are given.
        """
        cfg = self.cfg
        device = self.diffusion.device
        dtype = self.diffusion.dtype
        loader = DataLoader(
            dataset,
            batch_size=min(cfg.batch_size, len(dataset)),
            shuffle=True,
            generator=torch.Generator().manual_seed(self.seed),
            num_workers=self.num_workers,
        )
        can_save = checkpoint_path is not None and denoiser_cfg is not None and schedule_cfg is not None

        history = TrainingHistory()
        smoothed = None
        step = 0
        self.diffusion.model.train()
        while step < cfg.steps:
            for x0, cond, seg in loader:
                x0, cond, seg = (v.to(device=device, dtype=dtype) for v in (x0, cond, seg))
                loss = self.diffusion.loss(x0, cond, seg, self.generator)
                self.optimizer.zero_grad(set_to_none=True)
                loss.backward()
                self.optimizer.step()
                if self.ema is not None:
                    self.ema.update_parameters(self.diffusion.model)

                step += 1
                value = float(loss.detach())
                smoothed = value if smoothed is None else cfg.smoothing * smoothed + (1 - cfg.smoothing) * value
                history.losses.append(value)
                history.smoothed.append(smoothed)

                if step % cfg.log_every == 0 or step == cfg.steps:
                    log_training_progress(step, value, smoothed)
                if on_step is not None:
                    on_step(step, value, smoothed)
                if can_save and step % cfg.checkpoint_every == 0 and step != cfg.steps:
                    save_checkpoint(
                        checkpoint_path, self.diffusion, denoiser_cfg, schedule_cfg, step, self.ema_state()
                    )
                if step >= cfg.steps:
                    break

        if can_save:
            save_checkpoint(checkpoint_path, self.diffusion, denoiser_cfg, schedule_cfg, step, self.ema_state())
        return history
