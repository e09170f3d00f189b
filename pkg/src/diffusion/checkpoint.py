"""Versioned checkpoint archive: denoiser config, schedule parameters and weights."""

from dataclasses import dataclass
from pathlib import Path

import torch
from loguru import logger

from src.config.settings import DenoiserConfig, ScheduleConfig
from src.core.errors import CheckpointError
from src.diffusion.gaussian import GaussianDiffusion
from src.diffusion.schedule import schedule_from_config
from src.diffusion.unet import SemanticUNet

FORMAT_VERSION = 1


@dataclass
class CheckpointInfo:
    path: Path
    step: int
    n_classes: int
    factor: int
    denoiser: DenoiserConfig
    schedule: ScheduleConfig
    has_ema: bool


def build_diffusion(
    denoiser: DenoiserConfig, schedule: ScheduleConfig, n_classes: int, factor: int
) -> GaussianDiffusion:
    return GaussianDiffusion(SemanticUNet(denoiser, n_classes), schedule_from_config(schedule), factor)


def save_checkpoint(
    path: str | Path,
    diffusion: GaussianDiffusion,
    denoiser: DenoiserConfig,
    schedule: ScheduleConfig,
    step: int = 0,
    ema_state: dict[str, torch.Tensor] | None = None,
) -> Path:
    """Write weights (and EMA weights when given) with everything needed to rebuild the model."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "format_version": FORMAT_VERSION,
        "step": int(step),
        "n_classes": int(diffusion.model.n_classes),
        "factor": int(diffusion.factor),
        "denoiser": denoiser.model_dump(mode="json"),
        "schedule": schedule.model_dump(mode="json"),
        "state_dict": {k: v.detach().cpu() for k, v in diffusion.model.state_dict().items()},
        "ema_state_dict": (
            {k: v.detach().cpu() for k, v in ema_state.items()} if ema_state is not None else None
        ),
    }
    torch.save(payload, path)
    logger.info(f"Checkpoint saved: {path} (step {step})")
    return path


def load_checkpoint(
    path: str | Path, device: str = "cpu", use_ema: bool = True
) -> tuple[GaussianDiffusion, CheckpointInfo]:
    """Rebuild the diffusion decoder from a checkpoint.

    EMA weights are preferred when present and ``use_ema`` is set.

    Raises:
        CheckpointError: Missing file, unreadable archive or unknown format version.
    """
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"Checkpoint not found: {path}")
    try:
        payload = torch.load(path, map_location=device, weights_only=True)
    except Exception as e:
        raise CheckpointError(f"Cannot read checkpoint {path}: {e}") from e

    version = payload.get("format_version") if isinstance(payload, dict) else None
    if version != FORMAT_VERSION:
        raise CheckpointError(f"Unsupported checkpoint format {version!r} in {path}")

    try:
        denoiser = DenoiserConfig.model_validate(payload["denoiser"])
        schedule = ScheduleConfig.model_validate(payload["schedule"])
        diffusion = build_diffusion(denoiser, schedule, payload["n_classes"], payload["factor"])
        ema = payload.get("ema_state_dict")
        state = ema if (use_ema and ema is not None) else payload["state_dict"]
        diffusion.model.load_state_dict(state)
    except (KeyError, RuntimeError, ValueError) as e:
        raise CheckpointError(f"Checkpoint {path} is inconsistent: {e}") from e

    diffusion.to(device)
    diffusion.eval()
    info = CheckpointInfo(
        path=path,
        step=int(payload.get("step", 0)),
        n_classes=int(payload["n_classes"]),
        factor=int(payload["factor"]),
        denoiser=denoiser,
        schedule=schedule,
        has_ema=payload.get("ema_state_dict") is not None,
    )
    logger.debug(f"Loaded checkpoint {path} (step {info.step}, ema={info.has_ema and use_ema})")
    return diffusion, info
