"""Forward-process noise schedule and the closed-form noising q(x_t | x_0).

Timesteps are 1-based: ``t`` runs from 1 to ``T`` and ``t = 0`` denotes the
clean image (``alpha_bar = 1``). Arrays are stored 0-based, so entry ``t - 1``
belongs to step ``t``.
"""

import math
from dataclasses import dataclass

import numpy as np
import torch

from src.config.settings import ScheduleConfig
from src.core.types import ModelRangeImage


@dataclass(frozen=True, eq=False)
class NoiseSchedule:
    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray

    @property
    def T(self) -> int:
        return int(self.beta.size)

    def alpha_bar_at(self, t: int) -> float:
        """Cumulative product up to step ``t``; 1.0 at ``t = 0``."""
        if not 0 <= t <= self.T:
            raise ValueError(f"timestep {t} outside [0, {self.T}]")
        return 1.0 if t == 0 else float(self.alpha_bar[t - 1])

    def alpha_bar_tensor(self, dtype: torch.dtype = torch.float32, device=None) -> torch.Tensor:
        """alpha_bar with a leading 1.0, indexable directly by ``t`` in [0, T]."""
        padded = np.concatenate(([1.0], self.alpha_bar))
        return torch.as_tensor(padded, dtype=dtype, device=device)


def make_schedule(T: int, beta_start: float, beta_end: float) -> NoiseSchedule:
    """Linear beta schedule from ``beta_start`` to ``beta_end`` over ``T`` steps.

    Raises:
        ValueError: Unless ``T >= 1`` and ``0 < beta_start <= beta_end < 1``.
    """
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    if not 0.0 < beta_start <= beta_end < 1.0:
        raise ValueError(f"need 0 < beta_start <= beta_end < 1, got {beta_start}, {beta_end}")
    beta = np.linspace(beta_start, beta_end, T, dtype=np.float64)
    alpha = 1.0 - beta
    alpha_bar = np.cumprod(alpha)
    for arr in (beta, alpha, alpha_bar):
        arr.setflags(write=False)
    return NoiseSchedule(beta=beta, alpha=alpha, alpha_bar=alpha_bar)


def schedule_from_config(cfg: ScheduleConfig) -> NoiseSchedule:
    return make_schedule(cfg.T, cfg.beta_start, cfg.beta_end)


def q_sample(x0, t, eps, sched: NoiseSchedule):
    """Draw x_t = sqrt(alpha_bar_t) * x0 + sqrt(1 - alpha_bar_t) * eps.

    ``x0`` and ``eps`` are numpy arrays or tensors of equal shape. ``t`` is an
    int, or for batched tensors a ``(B,)`` integer tensor broadcast over the
    remaining dimensions.
    """
    if isinstance(x0, ModelRangeImage):
        x0 = x0.pixels
    if x0.shape != eps.shape:
        raise ValueError(f"x0 {tuple(x0.shape)} and eps {tuple(eps.shape)} differ in shape")
    if isinstance(t, torch.Tensor) and t.ndim == 1:
        if t.min() < 1 or t.max() > sched.T:
            raise ValueError(f"timesteps must lie in [1, {sched.T}]")
        ab = sched.alpha_bar_tensor(x0.dtype, x0.device)[t].view(-1, *([1] * (x0.ndim - 1)))
        return ab.sqrt() * x0 + (1.0 - ab).sqrt() * eps
    t = int(t)
    if not 1 <= t <= sched.T:
        raise ValueError(f"timestep {t} outside [1, {sched.T}]")
    ab = sched.alpha_bar_at(t)
    return math.sqrt(ab) * x0 + math.sqrt(1.0 - ab) * eps


def timestep_subsequence(T: int, steps: int) -> list[int]:
    """Strictly decreasing, uniformly spaced timesteps from ``T`` down to 1."""
    if not 1 <= steps <= T:
        raise ValueError(f"steps must lie in [1, {T}], got {steps}")
    seq = np.rint(np.linspace(T, 1, steps)).astype(np.int64)
    return [int(t) for t in seq]


def step_pairs(T: int, steps: int) -> list[tuple[int, int]]:
    """(t, t_prev) pairs of a reverse run; the last pair always ends at 0."""
    seq = timestep_subsequence(T, steps)
    return list(zip(seq, seq[1:] + [0]))
