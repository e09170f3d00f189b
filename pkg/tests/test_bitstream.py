"""Tests for the container format, rate accounting and the encode/decode front halves."""

from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.core.errors import (
    BadMagicError,
    BitstreamError,
    InvalidImageError,
    LengthMismatchError,
    PayloadTooLargeError,
    SegmenterError,
    SpicError,
    TruncatedHeaderError,
    UnsupportedVersionError,
)
from src.core.types import Image, SegmentationMap
from src.encoder.bitstream import (
    HEADER_SIZE,
    MAX_PAYLOAD,
    BitstreamHeader,
    SemanticBitstream,
    bits_per_pixel,
    compute_rate,
    pack,
    read_spic,
    unpack,
    write_spic,
)
from src.encoder.pipeline import EncodeOptions, decode_bitstream, encode_image
from src.encoder.scaling import downscale_average
from src.encoder.segmenter import (
    GroundTruthSegmenter,
    PrototypeSegmenter,
    build_segmenter,
    image_digest,
    segment,
)

GOLDEN = Path(__file__).parent / "golden" / "bitstream_tiny.hex"


def tiny_header(**overrides) -> BitstreamHeader:
    fields = dict(width=8, height=4, n_classes=3, coarse_quality=30)
    fields.update(overrides)
    return BitstreamHeader(**fields)


class TestContainer:
    """Test header layout and parse errors."""

    def test_golden_bytes(self):
        """The tiny container serializes to the frozen golden bytes."""
        bs = pack(b"\x01\x02", b"\x03", tiny_header())
        assert bs.to_bytes().hex() == GOLDEN.read_text().strip()

    def test_header_is_19_bytes(self):
        bs = pack(b"", b"", tiny_header())
        assert len(bs.to_bytes()) == HEADER_SIZE == 19
        assert len(bs) == 19

    def test_round_trip(self):
        meta = tiny_header(ssm_codec_id=1, coarse_codec_id=1, coarse_quality=12)
        s_bytes, c_bytes, parsed = unpack(pack(b"abc", b"defg", meta).to_bytes())
        assert (s_bytes, c_bytes, parsed) == (b"abc", b"defg", meta)

    def test_truncated(self):
        data = pack(b"\x01", b"\x02", tiny_header()).to_bytes()
        for cut in (0, 4, 18):
            with pytest.raises(TruncatedHeaderError):
                unpack(data[:cut])

    def test_bad_magic(self):
        data = bytearray(pack(b"", b"", tiny_header()).to_bytes())
        data[0] = ord("X")
        with pytest.raises(BadMagicError):
            unpack(bytes(data))

    def test_unsupported_version(self):
        data = bytearray(pack(b"", b"", tiny_header()).to_bytes())
        data[4] = 2
        with pytest.raises(UnsupportedVersionError):
            unpack(bytes(data))

    def test_length_mismatch(self):
        data = pack(b"\x01\x02", b"\x03", tiny_header()).to_bytes()
        with pytest.raises(LengthMismatchError):
            unpack(data + b"\x00")
        with pytest.raises(LengthMismatchError):
            unpack(data[:-1])

    def test_payload_too_large(self):
        with pytest.raises(PayloadTooLargeError):
            pack(bytes(MAX_PAYLOAD + 1), b"", tiny_header())

    def test_header_field_ranges(self):
        with pytest.raises(BitstreamError):
            tiny_header(width=0)
        with pytest.raises(BitstreamError):
            tiny_header(width=1 << 16)
        with pytest.raises(BitstreamError):
            tiny_header(n_classes=0)
        with pytest.raises(UnsupportedVersionError):
            tiny_header(version=3)

    def test_spic_file_round_trip(self, tmp_path):
        bs = pack(b"\x01\x02", b"\x03", tiny_header())
        path = write_spic(bs, tmp_path / "nested" / "tiny.spic")
        assert read_spic(path) == bs


class TestRate:
    """Test bits-per-pixel accounting."""

    @settings(max_examples=500, deadline=None)
    @given(
        st.integers(1, 4096),
        st.integers(1, 4096),
        st.integers(0, 5000),
        st.integers(0, 5000),
    )
    def test_sum_identity_is_exact(self, w, h, ssm_len, coarse_len):
        bs = pack(bytes(ssm_len), bytes(coarse_len), BitstreamHeader(width=w, height=h, n_classes=5))
        r = compute_rate(bs, w, h)
        assert r.bpp_total == r.bpp_ssm + r.bpp_coarse + r.bpp_header
        assert r.bpp_total == Fraction(8 * len(bs), w * h)

    def test_sum_identity_over_random_sizes(self, rng):
        for row in rng.integers(1, 5000, size=(10_000, 4)):
            w, h, ssm_len, coarse_len = (int(v) for v in row)
            header = BitstreamHeader(width=w, height=h, n_classes=5)
            r = compute_rate(pack(bytes(ssm_len), bytes(coarse_len), header), w, h)
            assert r.bpp_total == r.bpp_ssm + r.bpp_coarse + r.bpp_header

    def test_header_only(self):
        bs = pack(b"", b"", tiny_header())
        r = compute_rate(bs, 8, 4)
        assert r.bpp_total == Fraction(8 * 19, 32)
        assert r.bpp_ssm == 0 and r.bpp_coarse == 0

    def test_reference_ssm_rate_scale(self):
        """1835 bytes over a 256x512 frame is about 0.112 bpp."""
        assert float(bits_per_pixel(1835, 512, 256)) == pytest.approx(0.112, abs=1e-3)

    def test_as_dict_floats(self):
        d = compute_rate(pack(b"\x00", b"\x00" * 3, tiny_header()), 8, 4).as_dict()
        assert set(d) == {"bpp_total", "bpp_ssm", "bpp_coarse", "bpp_header"}
        assert d["bpp_total"] == pytest.approx(d["bpp_ssm"] + d["bpp_coarse"] + d["bpp_header"])

    def test_invalid_size(self):
        with pytest.raises(ValueError):
            compute_rate(pack(b"", b"", tiny_header()), 0, 4)


class TestSegmenters:
    """Test the segmenter contract and the bundled segmenters."""

    def test_prototype_recovers_synthetic_labels(self, sample):
        x, s = sample
        assert segment(x, PrototypeSegmenter()) == s

    def test_ground_truth_lookup(self, sample):
        x, s = sample
        seg = GroundTruthSegmenter(s.n_classes, [(x, s)])
        assert len(seg) == 1
        assert segment(x, seg) == s
        with pytest.raises(SegmenterError):
            segment(Image(np.zeros((64, 128, 3))), seg)

    def test_digest_is_content_based(self, sample):
        x, _ = sample
        assert image_digest(x) == image_digest(Image(x.pixels.copy()))

    def test_contract_violations(self, sample):
        x, _ = sample

        class WrongSize:
            name = "wrong-size"
            n_classes = 2

            def __call__(self, img):
                return SegmentationMap(np.zeros((2, 2), dtype=np.uint8), 2)

        class Crashes:
            name = "crashes"
            n_classes = 2

            def __call__(self, img):
                raise RuntimeError("model not loaded")

        class WrongClasses:
            name = "wrong-classes"
            n_classes = 3

            def __call__(self, img):
                return SegmentationMap(np.zeros(img.size, dtype=np.uint8), 2)

        for seg in (WrongSize(), Crashes(), WrongClasses()):
            with pytest.raises(SegmenterError):
                segment(x, seg)

    def test_build_segmenter(self):
        assert isinstance(build_segmenter("prototype", 5), PrototypeSegmenter)
        assert isinstance(build_segmenter("ground_truth", 5), GroundTruthSegmenter)
        with pytest.raises(ValueError):
            build_segmenter("oracle", 5)


class TestPipeline:
    """Test image -> bitstream -> (map, coarse image)."""

    def test_encode_decode(self, sample):
        x, s = sample
        enc = encode_image(x, PrototypeSegmenter(), EncodeOptions(quality=30, factor=4))
        dec = decode_bitstream(enc.bitstream.to_bytes(), factor=4)

        assert dec.segmentation == s
        assert dec.coarse.size == (16, 32)
        assert dec.header.coarse_quality == 30
        assert np.abs(dec.coarse.pixels - downscale_average(x, 4).pixels).mean() < 0.03
        assert dec.rate == enc.rate
        assert enc.rate.bpp_total == Fraction(8 * len(enc.bitstream), x.width * x.height)

    def test_encoding_is_deterministic(self, sample):
        x, _ = sample
        options = EncodeOptions(quality=26, factor=4)
        first = encode_image(x, PrototypeSegmenter(), options).bitstream.to_bytes()
        second = encode_image(x, PrototypeSegmenter(), options).bitstream.to_bytes()
        assert first == second

    def test_ssm_rate_is_independent_of_quality(self, sample):
        x, _ = sample
        rates = [
            encode_image(x, PrototypeSegmenter(), EncodeOptions(quality=q, factor=4)).rate
            for q in (36, 26, 16)
        ]
        assert len({r.bpp_ssm for r in rates}) == 1
        assert rates[0].bpp_coarse > rates[1].bpp_coarse > rates[2].bpp_coarse

    def test_indivisible_image_rejected(self):
        x = Image(np.full((18, 32, 3), 0.5))
        with pytest.raises(InvalidImageError):
            encode_image(x, PrototypeSegmenter(), EncodeOptions(quality=26, factor=4))

    def test_options_from_settings_ignore_none(self):
        options = EncodeOptions.from_settings(quality=None, factor=2)
        assert options.factor == 2
        assert 1 <= options.quality <= 51

    def test_single_byte_header_mutation_never_decodes(self, small_sample):
        """Every one-byte change of the header is detected."""
        x, _ = small_sample
        data = encode_image(x, PrototypeSegmenter(), EncodeOptions(quality=26, factor=4)).bitstream.to_bytes()
        for index in range(HEADER_SIZE):
            for flip in (0x01, 0x10, 0x80, 0xFF):
                broken = bytearray(data)
                broken[index] ^= flip
                with pytest.raises(SpicError):
                    decode_bitstream(bytes(broken), factor=4)

    @settings(max_examples=60, deadline=None)
    @given(st.data())
    def test_payload_corruption_never_decodes(self, data):
        from src.data.synthetic import render_sample

        x, _ = render_sample(np.random.default_rng(5), size=(16, 32))
        raw = encode_image(x, PrototypeSegmenter(), EncodeOptions(quality=26, factor=4)).bitstream.to_bytes()
        index = data.draw(st.integers(HEADER_SIZE, len(raw) - 1))
        flip = data.draw(st.integers(1, 255))
        broken = bytearray(raw)
        broken[index] ^= flip
        with pytest.raises(SpicError):
            decode_bitstream(bytes(broken), factor=4)

    def test_semantic_bitstream_from_bytes(self, small_sample):
        x, _ = small_sample
        bs = encode_image(x, PrototypeSegmenter(), EncodeOptions(quality=20, factor=4)).bitstream
        assert SemanticBitstream.from_bytes(bs.to_bytes()) == bs
