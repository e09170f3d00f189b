"""Application settings and configuration.

This module provides centralized configuration management using Pydantic settings.
All configuration values can be overridden via environment variables or a .env file;
nested groups use a double underscore, e.g. ``DENOISER__BASE_CHANNELS=32``.
"""

from pathlib import Path
from typing import Literal

from pydantic import BaseModel, Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class ScheduleConfig(BaseModel):
    """Linear beta schedule of the forward noising process."""

    T: int = Field(default=1000, ge=1)
    beta_start: float = 1e-4
    beta_end: float = 0.02


class DenoiserConfig(BaseModel):
    """U-Net architecture of the semantic-conditioned super-resolution denoiser.

    ``in_channels`` and ``out_channels`` are fixed: three noisy channels plus
    three channels of the upscaled coarse image in, predicted noise out.
    Levels are indexed from 0 (full resolution) to ``len(channel_mult) - 1``.
    """

    base_channels: int = Field(default=64, ge=1)
    channel_mult: tuple[int, ...] = (1, 2, 4)
    num_res_blocks: int = Field(default=2, ge=1)
    attention_levels: tuple[int, ...] = (2,)
    spade_hidden: int = Field(default=64, ge=1)
    norm_groups: int = Field(default=32, ge=1)
    time_embed_dim: int | None = None
    dropout: float = Field(default=0.0, ge=0.0, lt=1.0)
    zero_init_output: bool = True
    in_channels: Literal[6] = 6
    out_channels: Literal[3] = 3

    @model_validator(mode="after")
    def _check_levels(self) -> "DenoiserConfig":
        if not self.channel_mult:
            raise ValueError("channel_mult must name at least one level")
        bad = [lvl for lvl in self.attention_levels if not 0 <= lvl < len(self.channel_mult)]
        if bad:
            raise ValueError(f"attention_levels out of range: {bad}")
        return self

    @property
    def spade_levels(self) -> tuple[str, ...]:
        """Where SPADE modulation is applied: bottleneck and every decoder level."""
        return ("bottleneck", *(f"decoder{lvl}" for lvl in range(len(self.channel_mult))))

    @property
    def downsample_factor(self) -> int:
        """Spatial reduction between the input and the bottleneck."""
        return 2 ** (len(self.channel_mult) - 1)


class SamplerConfig(BaseModel):
    """Reverse-process settings used at the receiver."""

    steps: int = Field(default=20, ge=1)
    init_mode: Literal["coarse", "coarse_noised", "noise"] = "coarse"
    clip_denoised: bool = True
    seed: int = 0


class TrainConfig(BaseModel):
    """Epsilon-prediction training loop settings."""

    steps: int = Field(default=2000, ge=1)
    batch_size: int = Field(default=8, ge=1)
    learning_rate: float = Field(default=2e-4, gt=0)
    log_every: int = Field(default=50, ge=1)
    checkpoint_every: int = Field(default=500, ge=1)
    train_quality: int = Field(default=26, ge=1, le=51)
    ema_decay: float = Field(default=0.999, ge=0.0, lt=1.0)
    smoothing: float = Field(default=0.98, ge=0.0, lt=1.0)


class SweepConfig(BaseModel):
    """Rate-distortion sweep: coarse quality ladder plus baseline ladders."""

    quality_ladder: list[int] = [36, 26, 16]
    baseline_ladder: list[int] = [46, 36, 26, 16, 6]
    ssm_codec_id: int = 0
    coarse_codec_id: int = 0
    output_dir: Path | None = None
    split: str | None = "val"
    seed: int = 0
    workers: int = Field(default=1, ge=1)
    feature_dim: int = Field(default=64, ge=2)

    @field_validator("quality_ladder", "baseline_ladder")
    @classmethod
    def _check_ladder(cls, ladder: list[int]) -> list[int]:
        if not ladder:
            raise ValueError("quality ladder must not be empty")
        if any(not 1 <= q <= 51 for q in ladder):
            raise ValueError(f"qualities must lie in [1, 51]: {ladder}")
        return ladder


class Settings(BaseSettings):
    """Application settings loaded from environment variables.

    All settings can be overridden by creating a .env file in the project root.
    See .env.example for available configuration options.
    """

    # ========================================================================
    # Codec / bitstream
    # ========================================================================
    downscale_factor: int = Field(default=4, ge=1)
    bitstream_version: int = 1
    ssm_codec_id: int = 0
    coarse_codec_id: int = 0
    coarse_quality: int = Field(default=26, ge=1, le=51)
    n_classes: int = Field(default=5, ge=1, le=255)
    segmenter: Literal["prototype", "ground_truth"] = "prototype"

    # External tools (optional adapters, codec id 1)
    flif_binary: str = "flif"
    bpgenc_binary: str = "bpgenc"
    bpgdec_binary: str = "bpgdec"

    # ========================================================================
    # Diffusion decoder
    # ========================================================================
    schedule: ScheduleConfig = ScheduleConfig()
    denoiser: DenoiserConfig = DenoiserConfig()
    sampler: SamplerConfig = SamplerConfig()
    train: TrainConfig = TrainConfig()
    sweep: SweepConfig = SweepConfig()

    seed: int = 0
    device: str = "cpu"
    num_workers: int = Field(default=0, ge=0)
    checkpoint_path: str = "checkpoints/scsrdm.pt"

    # ========================================================================
    # Logging Configuration
    # ========================================================================
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"] = "INFO"
    log_file: str | None = None  # Optional: if None, logs to console only

    # ========================================================================
    # Computed Properties
    # ========================================================================
    @property
    def project_root(self) -> Path:
        """Get project root directory."""
        return Path(__file__).parent.parent.parent

    @property
    def data_dir(self) -> Path:
        """Get data directory path."""
        return self.project_root / "data"

    @property
    def synthetic_dir(self) -> Path:
        """Get the default synthetic-shapes corpus directory."""
        return self.data_dir / "synthetic"

    @property
    def checkpoints_dir(self) -> Path:
        """Get checkpoints directory path."""
        return self.project_root / "checkpoints"

    @property
    def runs_dir(self) -> Path:
        """Get sweep run output directory path."""
        return self.project_root / "runs"

    @property
    def logs_dir(self) -> Path:
        """Get logs directory path."""
        return self.project_root / "logs"

    @property
    def resolved_checkpoint(self) -> Path:
        """Checkpoint path, relative paths anchored at the project root."""
        path = Path(self.checkpoint_path)
        return path if path.is_absolute() else self.project_root / path

    # ========================================================================
    # Pydantic Configuration
    # ========================================================================
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_nested_delimiter="__",
        case_sensitive=False,
        extra="ignore",
    )

    def ensure_directories(self) -> None:
        """Create all necessary directories if they don't exist."""
        directories = [
            self.data_dir,
            self.checkpoints_dir,
            self.runs_dir,
            self.logs_dir,
        ]

        for directory in directories:
            directory.mkdir(parents=True, exist_ok=True)


def load_settings(config_file: str | Path | None = None) -> Settings:
    """Build settings, optionally reading KEY=value pairs from ``config_file``."""
    if config_file is None:
        return Settings()
    path = Path(config_file)
    if not path.exists():
        raise FileNotFoundError(f"Config file not found: {path}")
    return Settings(_env_file=path)


# Global settings instance
settings = Settings()


def reload_settings(config_file: str | Path | None = None) -> Settings:
    """Re-read configuration into the global ``settings`` instance.

    Modules hold a reference to the global object, so values are replaced in
    place rather than rebinding the name.
    """
    fresh = load_settings(config_file)
    for name in type(fresh).model_fields:
        setattr(settings, name, getattr(fresh, name))
    return settings

# Ensure directories exist on import
settings.ensure_directories()


if __name__ == "__main__":
    """Print current configuration for debugging."""
    import json

    config_dict = {
        "Codec": {
            "downscale_factor": settings.downscale_factor,
            "ssm_codec_id": settings.ssm_codec_id,
            "coarse_codec_id": settings.coarse_codec_id,
            "coarse_quality": settings.coarse_quality,
            "n_classes": settings.n_classes,
            "segmenter": settings.segmenter,
        },
        "Diffusion": {
            "schedule": settings.schedule.model_dump(),
            "denoiser": settings.denoiser.model_dump(),
            "sampler": settings.sampler.model_dump(),
            "train": settings.train.model_dump(),
            "checkpoint": str(settings.resolved_checkpoint),
        },
        "Sweep": settings.sweep.model_dump(mode="json"),
        "Logging": {
            "level": settings.log_level,
            "file": settings.log_file or "console",
        },
        "Paths": {
            "project_root": str(settings.project_root),
            "data_dir": str(settings.data_dir),
            "runs_dir": str(settings.runs_dir),
            "logs_dir": str(settings.logs_dir),
        },
    }

    print("Current Configuration:")
    print(json.dumps(config_dict, indent=2))
