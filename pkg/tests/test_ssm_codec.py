"""Tests for the arithmetic coder and the lossless label-map codec."""

import zlib
from bisect import bisect_right
from itertools import accumulate

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from src.core.errors import DecodeError
from src.core.types import SegmentationMap
from src.encoder.range_coder import AdaptiveModel, RangeDecoder, RangeEncoder
from src.encoder.ssm_codec import decode_labels_rle, encode_labels_rle, label_runs


@st.composite
def label_maps(draw, max_side: int = 24):
    n_classes = draw(st.integers(1, 12))
    h = draw(st.integers(1, max_side))
    w = draw(st.integers(1, max_side))
    labels = draw(arrays(np.uint8, (h, w), elements=st.integers(0, n_classes - 1)))
    return SegmentationMap(labels, n_classes)


class ArithmeticReader:
    """Second, separately written decoder for the label payload's coded stream."""

    HALF, QUARTER = 1 << 31, 1 << 30

    def __init__(self, stream: bytes):
        self.bits = np.unpackbits(np.frombuffer(stream, dtype=np.uint8)).tolist()
        self.pos = 0
        self.low, self.high = 0, (1 << 32) - 1
        self.value = 0
        for _ in range(32):
            self.value = 2 * self.value + self._bit()

    def _bit(self) -> int:
        bit = self.bits[self.pos] if self.pos < len(self.bits) else 0
        self.pos += 1
        return bit

    def _target(self, total: int) -> int:
        span = self.high - self.low + 1
        return ((self.value - self.low + 1) * total - 1) // span

    def _narrow(self, lo: int, hi: int, total: int) -> None:
        span = self.high - self.low + 1
        self.high = self.low + span * hi // total - 1
        self.low = self.low + span * lo // total
        while True:
            if self.high < self.HALF:
                offset = 0
            elif self.low >= self.HALF:
                offset = self.HALF
            elif self.low >= self.QUARTER and self.high < 3 * self.QUARTER:
                offset = self.QUARTER
            else:
                return
            self.low = 2 * (self.low - offset)
            self.high = 2 * (self.high - offset) + 1
            self.value = 2 * (self.value - offset) + self._bit()

    def symbol(self, freqs: list[int]) -> int:
        cum = list(accumulate(freqs))
        k = bisect_right(cum, self._target(cum[-1]))
        self._narrow(cum[k] - freqs[k], cum[k], cum[-1])
        freqs[k] += 24
        if sum(freqs) > 1 << 16:
            freqs[:] = [max(1, f >> 1) for f in freqs]
        return k

    def raw(self, nbits: int) -> int:
        value = 0
        while nbits > 0:
            chunk = min(nbits, 16)
            nbits -= chunk
            part = self._target(1 << chunk)
            self._narrow(part, part + 1, 1 << chunk)
            value = (value << chunk) | part
        return value


def reread_labels(payload: bytes, height: int, width: int) -> np.ndarray:
    body = payload[:-4]
    assert zlib.crc32(body) == int.from_bytes(payload[-4:], "big")
    p = body[1]
    palette = list(body[2 : 2 + p])
    if p == 1:
        return np.full((height, width), palette[0])

    reader = ArithmeticReader(body[2 + p :])
    label_freqs = [[1] * p for _ in range(p + 1)]
    run_freqs = [[1] * 40 for _ in range(p)]
    flat: list[int] = []
    prev = p
    while len(flat) < height * width:
        k = reader.symbol(label_freqs[prev])
        bucket = reader.symbol(run_freqs[k])
        flat.extend([palette[k]] * ((1 << bucket) + reader.raw(bucket)))
        prev = k
    return np.array(flat).reshape(height, width)


class TestRangeCoder:
    """Test the adaptive arithmetic coder in isolation."""

    def test_symbols_and_bits_round_trip(self, rng):
        symbols = rng.integers(0, 7, size=500).tolist()
        raw = rng.integers(0, 1 << 20, size=50).tolist()

        enc = RangeEncoder()
        model = AdaptiveModel(7)
        for sym in symbols:
            enc.encode_symbol(model, sym)
        for value in raw:
            enc.encode_bits(value, 20)
        data = enc.finish()

        dec = RangeDecoder(data)
        model = AdaptiveModel(7)
        assert [dec.decode_symbol(model) for _ in symbols] == symbols
        assert [dec.decode_bits(20) for _ in raw] == raw

    def test_skewed_source_compresses(self):
        enc = RangeEncoder()
        model = AdaptiveModel(4)
        for _ in range(4000):
            enc.encode_symbol(model, 0)
        assert len(enc.finish()) < 100

    def test_model_rejects_foreign_symbol(self):
        with pytest.raises(ValueError):
            AdaptiveModel(3).interval(3)

    def test_empty_stream_eventually_fails(self):
        dec = RangeDecoder(b"")
        model = AdaptiveModel(2)
        with pytest.raises(DecodeError):
            for _ in range(10_000):
                dec.decode_bits(16)
                dec.decode_symbol(model)


class TestLabelRuns:
    def test_runs(self):
        values, lengths = label_runs(np.array([1, 1, 0, 0, 0, 2]))
        assert values.tolist() == [1, 0, 2]
        assert lengths.tolist() == [2, 3, 1]


class TestLabelCodec:
    """Test losslessness and corruption detection."""

    @settings(max_examples=300, deadline=None)
    @given(label_maps())
    def test_lossless(self, s):
        payload = encode_labels_rle(s)
        assert decode_labels_rle(payload, s.height, s.width, s.n_classes) == s

    def test_synthetic_maps_are_lossless_and_small(self, rng):
        from src.data.synthetic import render_sample

        for _ in range(8):
            _, s = render_sample(rng)
            payload = encode_labels_rle(s)
            assert decode_labels_rle(payload, s.height, s.width, s.n_classes) == s
            assert 8 * len(payload) / (s.height * s.width) < 1.0

    def test_thousand_random_maps(self, rng):
        for _ in range(1000):
            n_c = int(rng.integers(1, 9))
            h, w = (int(v) for v in rng.integers(1, 17, size=2))
            s = SegmentationMap(rng.integers(0, n_c, size=(h, w)), n_c)
            assert decode_labels_rle(encode_labels_rle(s), h, w, n_c) == s

    def test_corpus_maps_are_lossless(self, corpus):
        from src.data import ingest

        for _, _, s in ingest(corpus).samples():
            assert decode_labels_rle(encode_labels_rle(s), s.height, s.width, s.n_classes) == s

    @settings(max_examples=200, deadline=None)
    @given(label_maps())
    def test_second_decoder_agrees(self, s):
        payload = encode_labels_rle(s)
        np.testing.assert_array_equal(reread_labels(payload, s.height, s.width), s.labels)

    def test_second_decoder_agrees_on_synthetic_maps(self, rng):
        from src.data.synthetic import render_sample

        for _ in range(4):
            _, s = render_sample(rng)
            np.testing.assert_array_equal(reread_labels(encode_labels_rle(s), s.height, s.width), s.labels)

    def test_constant_full_frame_is_tiny(self):
        s = SegmentationMap(np.full((256, 512), 7), 34)
        payload = encode_labels_rle(s)
        assert len(payload) < 100
        assert decode_labels_rle(payload, 256, 512, 34) == s

    def test_single_pixel(self):
        s = SegmentationMap(np.array([[0]]), 1)
        assert decode_labels_rle(encode_labels_rle(s), 1, 1, 1) == s

    def test_constant_map_has_no_stream(self):
        s = SegmentationMap(np.full((32, 32), 3), 5)
        payload = encode_labels_rle(s)
        assert len(payload) == 2 + 1 + 4
        assert decode_labels_rle(payload, 32, 32, 5) == s

    def test_checkerboard_all_runs_of_one(self):
        labels = np.indices((16, 16)).sum(axis=0) % 2
        s = SegmentationMap(labels, 2)
        assert decode_labels_rle(encode_labels_rle(s), 16, 16, 2) == s

    def test_max_classes(self, rng):
        s = SegmentationMap(rng.integers(0, 255, size=(20, 20)), 255)
        assert decode_labels_rle(encode_labels_rle(s), 20, 20, 255) == s

    @settings(max_examples=100, deadline=None)
    @given(label_maps(max_side=12), st.data())
    def test_single_byte_corruption_raises(self, s, data):
        payload = bytearray(encode_labels_rle(s))
        index = data.draw(st.integers(0, len(payload) - 1))
        flip = data.draw(st.integers(1, 255))
        payload[index] ^= flip
        with pytest.raises(DecodeError):
            decode_labels_rle(bytes(payload), s.height, s.width, s.n_classes)

    @settings(max_examples=100, deadline=None)
    @given(label_maps(max_side=12), st.data())
    def test_truncation_raises(self, s, data):
        payload = encode_labels_rle(s)
        cut = data.draw(st.integers(0, len(payload) - 1))
        with pytest.raises(DecodeError):
            decode_labels_rle(payload[:cut], s.height, s.width, s.n_classes)

    def test_wrong_class_count_raises(self, random_map):
        s = random_map(8, 8, 4)
        with pytest.raises(DecodeError):
            decode_labels_rle(encode_labels_rle(s), 8, 8, 5)

