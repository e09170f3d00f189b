"""Shared fixtures: seeded generators, synthetic samples and tiny model configs."""

import numpy as np
import pytest

from src.config.settings import DenoiserConfig, SamplerConfig, ScheduleConfig
from src.core.types import Image, SegmentationMap
from src.data.synthetic import make_synthetic, render_sample


@pytest.fixture
def rng():
    """Seeded numpy generator."""
    return np.random.default_rng(1234)


@pytest.fixture
def sample():
    """One synthetic (image, label map) pair at 64x128."""
    return render_sample(np.random.default_rng(0))


@pytest.fixture
def small_sample():
    """One synthetic pair at 16x32 for model tests."""
    return render_sample(np.random.default_rng(7), size=(16, 32))


@pytest.fixture
def flat_image():
    """8x8 image of a single colour."""
    return Image(np.full((8, 8, 3), 0.25))


@pytest.fixture
def corpus(tmp_path):
    """Small synthetic corpus on disk: 4 train and 2 val images at 16x32."""
    return make_synthetic(tmp_path / "corpus", n_train=4, n_val=2, seed=3, size=(16, 32))


@pytest.fixture
def tiny_denoiser():
    """Denoiser small enough to run on CPU in milliseconds."""
    return DenoiserConfig(
        base_channels=8,
        channel_mult=(1, 2),
        num_res_blocks=1,
        attention_levels=(),
        spade_hidden=8,
        norm_groups=4,
    )


@pytest.fixture
def tiny_schedule():
    return ScheduleConfig(T=50)


@pytest.fixture
def fast_sampler():
    return SamplerConfig(steps=3, seed=0)


@pytest.fixture
def random_map(rng):
    """Factory for uniformly random label maps."""

    def make(h: int, w: int, n_classes: int) -> SegmentationMap:
        return SegmentationMap(rng.integers(0, n_classes, size=(h, w)), n_classes)

    return make
