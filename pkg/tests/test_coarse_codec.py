"""Tests for the reference DCT coder, the codec registry and resolution changes."""

import struct
import zlib

import numpy as np
import pytest

from src.analysis.metrics import psnr
from src.config.settings import settings
from src.core.errors import (
    CodecUnavailableError,
    DecodeError,
    ExternalCodecError,
    ExternalDecodeError,
    InvalidImageError,
    InvalidQualityError,
    UnknownCodecError,
)
from src.core.types import CoarseImage, Image
from src.encoder import coarse_codec
from src.encoder.codecs import (
    EXTERNAL,
    available_codecs,
    decode_lossy,
    encode_lossy,
    encode_ssm_lossless,
)
from src.encoder.coarse_codec import ZIGZAG, decode_dct, encode_dct, quantizer_steps
from src.encoder.external import BpgAdapter, FlifAdapter, bpg_qp
from src.encoder.scaling import downscale_average, upscale_bilinear, upscale_coarse


class TestQuantizer:
    """Test the quality scale."""

    def test_finest_quality(self):
        assert quantizer_steps(51) == (0.625, 0.625)

    def test_step_doubles_every_six(self):
        _, a = quantizer_steps(30)
        _, b = quantizer_steps(24)
        assert b == pytest.approx(2 * a)

    def test_dc_step_is_capped(self):
        dc, ac = quantizer_steps(1)
        assert dc == 8.0
        assert ac > 100

    def test_out_of_range(self):
        for q in (0, 52, -3):
            with pytest.raises(InvalidQualityError):
                quantizer_steps(q)

    def test_zigzag_is_permutation(self):
        assert sorted(ZIGZAG.tolist()) == list(range(64))
        assert ZIGZAG[:4].tolist() == [0, 1, 8, 16]


class TestDctCodec:
    """Test coding quality and payload integrity."""

    def test_round_trip_reports_size_and_quality(self, sample):
        x, _ = sample
        pixels, quality = decode_dct(encode_dct(x.pixels, 30))
        assert pixels.shape == x.pixels.shape
        assert quality == 30
        assert pixels.min() >= 0.0 and pixels.max() <= 1.0

    def test_finest_quality_is_near_lossless(self, sample):
        x, _ = sample
        pixels, _ = decode_dct(encode_dct(x.pixels, 51))
        assert psnr(x, Image(pixels)) > 40.0

    def test_quality_ladder_is_monotone(self, sample):
        """Higher quality costs more bytes and gives higher PSNR."""
        x, _ = sample
        sizes, scores = [], []
        for q in (6, 26, 46):
            payload = encode_dct(x.pixels, q)
            sizes.append(len(payload))
            scores.append(psnr(x, Image(decode_dct(payload)[0])))
        assert sizes[0] < sizes[1] < sizes[2]
        assert scores[0] < scores[1] < scores[2]

    @pytest.mark.slow
    def test_full_ladder_over_twenty_coarse_images(self):
        """Corpus MSE never rises and corpus bytes never fall as quality goes 1 -> 51."""
        from src.data.synthetic import render_sample

        rng = np.random.default_rng(20)
        corpus = [downscale_average(render_sample(rng)[0], 4).pixels for _ in range(20)]

        mse, size = [], []
        for q in range(1, 52):
            errors, total = [], 0
            for pixels in corpus:
                payload = encode_dct(pixels, q)
                total += len(payload)
                errors.append(np.mean((decode_dct(payload)[0] - pixels) ** 2))
            mse.append(float(np.mean(errors)))
            size.append(total)

        assert all(later <= earlier for earlier, later in zip(mse, mse[1:]))
        assert all(later >= earlier for earlier, later in zip(size, size[1:]))
        assert size[0] > 0

    def test_flat_image_within_half_grey_level(self, flat_image):
        for q in (1, 16, 51):
            pixels, _ = decode_dct(encode_dct(flat_image.pixels, q))
            np.testing.assert_allclose(pixels, flat_image.pixels, atol=0.5 / 255 + 1e-9)

    def test_odd_sizes_are_padded(self, rng):
        pixels = rng.uniform(size=(5, 11, 3))
        out, _ = decode_dct(encode_dct(pixels, 40))
        assert out.shape == (5, 11, 3)

    def test_corruption_raises(self, sample):
        x, _ = sample
        payload = bytearray(encode_dct(x.pixels, 26))
        for index in (0, 4, len(payload) // 2, len(payload) - 1):
            broken = bytearray(payload)
            broken[index] ^= 0x5A
            with pytest.raises(DecodeError):
                decode_dct(bytes(broken))

    def test_truncated_raises(self, sample):
        x, _ = sample
        payload = encode_dct(x.pixels, 26)
        for cut in (0, 3, len(payload) - 1):
            with pytest.raises(DecodeError):
                decode_dct(payload[:cut])

    def test_deterministic(self, sample):
        x, _ = sample
        assert encode_dct(x.pixels, 20) == encode_dct(x.pixels, 20)


class TestCodecRegistry:
    """Test codec id dispatch."""

    def test_reference_codecs_always_available(self):
        codecs = available_codecs()
        assert codecs["ssm"]["reference-rle"] is True
        assert codecs["coarse"]["reference-dct"] is True

    def test_unknown_ids(self, sample):
        x, s = sample
        with pytest.raises(UnknownCodecError):
            encode_lossy(x.pixels, 26, codec_id=7)
        with pytest.raises(UnknownCodecError):
            encode_ssm_lossless(s, codec_id=9)

    def test_decode_checks_size_and_quality(self, sample):
        x, _ = sample
        payload = encode_lossy(x.pixels, 26)
        assert decode_lossy(payload, x.height, x.width, 26).shape == x.pixels.shape
        with pytest.raises(DecodeError):
            decode_lossy(payload, x.height, x.width, 27)
        with pytest.raises(DecodeError):
            decode_lossy(payload, x.height, x.width + 4, 26)

    def test_declared_size_checked_before_decoding(self, monkeypatch):
        """A checksum-valid payload claiming a 65535x65535 frame is refused up front."""
        body = struct.pack(">HHB", 0xFFFF, 0xFFFF, 30) + bytes(8)
        payload = body + struct.pack(">I", zlib.crc32(body))

        def refuse(*args, **kwargs):
            raise AssertionError("stream decoding started")

        monkeypatch.setattr(coarse_codec, "RangeDecoder", refuse)
        with pytest.raises(DecodeError, match="expected 32x16"):
            decode_lossy(payload, 16, 32, 30)
        with pytest.raises(DecodeError, match="quality"):
            decode_dct(payload, (0xFFFF, 0xFFFF), 31)

    def test_invalid_quality(self, sample):
        x, _ = sample
        with pytest.raises(InvalidQualityError):
            encode_lossy(x.pixels, 0)


def fake_tool(tmp_path, name: str, script: str) -> str:
    """Executable shell script standing in for a codec binary."""
    path = tmp_path / name
    path.write_text(f"#!/bin/sh\n{script}\n")
    path.chmod(0o755)
    return str(path)


class TestExternalAdapters:
    """Test the command-line codec adapters against stand-in binaries."""

    def test_bpg_quantizer_is_mirrored_quality(self):
        assert bpg_qp(51) == 0
        assert bpg_qp(1) == 50
        assert bpg_qp(26) == 25
        with pytest.raises(InvalidQualityError):
            bpg_qp(52)

    def test_failing_decoder_is_a_decode_error(self, tmp_path):
        bpg = BpgAdapter(decoder=fake_tool(tmp_path, "bpgdec", "echo broken >&2; exit 3"))
        flif = FlifAdapter(fake_tool(tmp_path, "flif", "exit 1"))
        with pytest.raises(DecodeError, match="exited with 3: broken"):
            bpg.decode(b"\x00" * 8, 4, 4)
        with pytest.raises(DecodeError):
            flif.decode(b"\x00" * 8, 4, 4)

    def test_silent_decoder_is_a_decode_error(self, tmp_path):
        bpg = BpgAdapter(decoder=fake_tool(tmp_path, "bpgdec", "exit 0"))
        with pytest.raises(ExternalDecodeError, match="no readable raster"):
            bpg.decode(b"\x00" * 8, 4, 4)

    def test_failing_encoder_is_not_a_decode_error(self, tmp_path):
        bpg = BpgAdapter(encoder=fake_tool(tmp_path, "bpgenc", "exit 2"))
        with pytest.raises(ExternalCodecError) as info:
            bpg.encode(np.zeros((4, 4, 3)), 26)
        assert not isinstance(info.value, DecodeError)

    def test_registry_decode_surfaces_decode_error(self, tmp_path, monkeypatch):
        monkeypatch.setattr(settings, "bpgdec_binary", fake_tool(tmp_path, "bpgdec", "exit 1"))
        with pytest.raises(DecodeError):
            decode_lossy(b"\x00" * 8, 4, 4, 26, codec_id=EXTERNAL)

    def test_missing_binary(self, tmp_path):
        with pytest.raises(CodecUnavailableError):
            BpgAdapter(decoder=str(tmp_path / "absent")).decode(b"", 4, 4)


class TestScaling:
    """Test block averaging and bilinear upscaling."""

    def test_block_average(self):
        pixels = np.zeros((4, 4, 3))
        pixels[:2, :2] = 1.0
        c = downscale_average(Image(pixels), 2)
        assert c.size == (2, 2)
        assert c.pixels[0, 0, 0] == 1.0
        assert c.pixels[1, 1, 0] == 0.0

    def test_preserves_mean(self, sample):
        x, _ = sample
        c = downscale_average(x, 4)
        assert c.pixels.mean() == pytest.approx(x.pixels.mean(), abs=1e-12)

    def test_indivisible_raises(self):
        with pytest.raises(InvalidImageError):
            downscale_average(Image(np.zeros((6, 8, 3))), 4)

    def test_upscale_constant_is_constant(self):
        c = CoarseImage(np.full((3, 5, 3), 0.4))
        up = upscale_coarse(c, 4)
        assert up.size == (12, 20)
        np.testing.assert_allclose(up.pixels, 0.4)

    def test_upscale_matches_half_pixel_convention(self):
        """Two samples 0 and 1 enlarged by 2 give 0, 0.25, 0.75, 1."""
        row = np.array([[[0.0], [1.0]]])
        out = upscale_bilinear(row, 2)
        np.testing.assert_allclose(out[0, :, 0], [0.0, 0.25, 0.75, 1.0])

    def test_factor_one_is_identity(self, rng):
        pixels = rng.uniform(size=(3, 4, 3))
        np.testing.assert_array_equal(upscale_bilinear(pixels, 1), pixels)
