"""Semantic-conditioned super-resolution diffusion decoder."""

from src.diffusion.checkpoint import build_diffusion, load_checkpoint, save_checkpoint
from src.diffusion.gaussian import GaussianDiffusion, denoise_step_input
from src.diffusion.reconstruct import reconstruct
from src.diffusion.schedule import NoiseSchedule, make_schedule, q_sample, step_pairs, timestep_subsequence
from src.diffusion.spade import SPADE, spade_modulate
from src.diffusion.trainer import SemanticSRDataset, Trainer, TrainingHistory
from src.diffusion.unet import SemanticUNet

__all__ = [
    "SPADE",
    "GaussianDiffusion",
    "NoiseSchedule",
    "SemanticSRDataset",
    "SemanticUNet",
    "Trainer",
    "TrainingHistory",
    "build_diffusion",
    "denoise_step_input",
    "load_checkpoint",
    "make_schedule",
    "q_sample",
    "reconstruct",
    "save_checkpoint",
    "spade_modulate",
    "step_pairs",
    "timestep_subsequence",
]
