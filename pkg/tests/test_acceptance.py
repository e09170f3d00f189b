"""End-to-end runs on the synthetic corpus: train, encode, reconstruct, score.

Marked slow; run with ``pytest -m slow``.
"""

import numpy as np
import pytest
import torch

from src.analysis.metrics import miou
from src.config.settings import DenoiserConfig, SamplerConfig, ScheduleConfig, TrainConfig
from src.core.types import Image, SegmentationMap
from src.data import ingest, make_synthetic
from src.diffusion import SemanticSRDataset, Trainer, build_diffusion, reconstruct
from src.diffusion.trainer import degraded_coarse
from src.encoder.pipeline import EncodeOptions, decode_bitstream, encode_image
from src.encoder.scaling import upscale_coarse
from src.encoder.segmenter import PrototypeSegmenter, segment

pytestmark = pytest.mark.slow

SIZE = (32, 64)
QUALITY = 16


@pytest.fixture(scope="module")
def toy_run(tmp_path_factory):
    root = make_synthetic(tmp_path_factory.mktemp("toy"), n_train=64, n_val=16, seed=0, size=SIZE)
    manifest = ingest(root)
    train = [(x, s) for _, x, s in manifest.samples("train")]

    torch.manual_seed(0)
    denoiser = DenoiserConfig(
        base_channels=32, channel_mult=(1, 2, 2), num_res_blocks=1, attention_levels=(2,), spade_hidden=32
    )
    diffusion = build_diffusion(denoiser, ScheduleConfig(), manifest.n_classes, factor=4)
    cfg = TrainConfig(steps=2000, batch_size=8, learning_rate=2e-4, ema_decay=0.0, train_quality=QUALITY)
    history = Trainer(diffusion, cfg, seed=0).fit(SemanticSRDataset(train, factor=4, quality=QUALITY))
    return manifest, diffusion, history


def test_smoothed_loss_halves(toy_run):
    _, _, history = toy_run
    assert len(history.losses) == 2000
    assert history.reduction(from_step=50) >= 0.5


def test_reconstruction_preserves_semantics(toy_run):
    """Diffusion reconstructions segment closer to the transmitted map than bilinear upscales."""
    manifest, diffusion, _ = toy_run
    segmenter = PrototypeSegmenter()
    sampler = SamplerConfig(steps=20, seed=0)
    spic_scores, bilinear_scores = [], []
    for _, x, _ in manifest.samples("val"):
        enc = encode_image(x, segmenter, EncodeOptions(quality=QUALITY, factor=4))
        dec = decode_bitstream(enc.bitstream.to_bytes(), factor=4)
        spic_scores.append(miou(enc.segmentation, segment(reconstruct(dec, diffusion, sampler), segmenter)))
        bilinear_scores.append(miou(enc.segmentation, segment(upscale_coarse(dec.coarse, 4), segmenter)))
    assert len(spic_scores) == 16
    assert np.mean(spic_scores) > np.mean(bilinear_scores)


def test_one_image_overfit_returns_the_constant():
    """A model overfit to one flat image reproduces it from its own coarse version.

    The 2/255 bound applies to the mean absolute error over the frame.
    """
    x = Image(np.full((16, 32, 3), 0.3))
    s = SegmentationMap(np.zeros((16, 32), dtype=np.uint8), 5)

    torch.manual_seed(0)
    denoiser = DenoiserConfig(
        base_channels=16, channel_mult=(1, 2), num_res_blocks=1, attention_levels=(), spade_hidden=16
    )
    diffusion = build_diffusion(denoiser, ScheduleConfig(T=50), n_classes=5, factor=4)
    cfg = TrainConfig(steps=3000, batch_size=8, learning_rate=1e-3, ema_decay=0.0, train_quality=46)
    Trainer(diffusion, cfg, seed=0).fit(SemanticSRDataset([(x, s)] * 8, factor=4, quality=46))

    out = diffusion.sample(degraded_coarse(x, 4, 46), s, SamplerConfig(steps=50, seed=0))
    assert np.abs(out.pixels - 0.3).mean() <= 2 / 255
