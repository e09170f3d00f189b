"""Receiver back half: decoded (SSM, coarse) pair to full-resolution image."""

from src.config.settings import SamplerConfig
from src.core.types import Image
from src.diffusion.gaussian import GaussianDiffusion
from src.encoder.pipeline import DecodedPayload


def reconstruct(decoded: DecodedPayload, diffusion: GaussianDiffusion, cfg: SamplerConfig) -> Image:
    """Run the reverse process conditioned on the payloads of one bitstream."""
    if decoded.factor != diffusion.factor:
        raise ValueError(
            f"bitstream decoded with factor {decoded.factor}, model trained for {diffusion.factor}"
        )
    if decoded.segmentation.n_classes != diffusion.model.n_classes:
        raise ValueError(
            f"bitstream has {decoded.segmentation.n_classes} classes, "
            f"model expects {diffusion.model.n_classes}"
        )
    return diffusion.sample(decoded.coarse, decoded.segmentation, cfg)
