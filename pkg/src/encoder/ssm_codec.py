"""Reference lossless label-map coder (codec id 0).

Payload layout::

    n_classes   u8
    palette_len u8            P, number of distinct labels present
    palette     P x u8        ascending labels
    stream      bytes         arithmetic-coded runs, absent when P == 1
    crc32       u32 BE        over every preceding byte

The map is scanned row-major as one sequence of runs. Each run codes its
palette index (context: previous run's index) and its length as a
bit-length bucket (context: run's index) followed by the raw mantissa bits.
"""

import struct
import zlib

import numpy as np

from src.core.errors import DecodeError
from src.core.types import SegmentationMap
from src.encoder.range_coder import AdaptiveModel, RangeDecoder, RangeEncoder

RUN_BUCKETS = 40
_CRC = struct.Struct(">I")


def _models(palette_len: int) -> tuple[list[AdaptiveModel], list[AdaptiveModel]]:
    label_models = [AdaptiveModel(palette_len) for _ in range(palette_len + 1)]
    run_models = [AdaptiveModel(RUN_BUCKETS) for _ in range(palette_len)]
    return label_models, run_models


def label_runs(indices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split a flat index sequence into (values, lengths) of maximal runs."""
    starts = np.concatenate(([0], np.flatnonzero(np.diff(indices)) + 1))
    lengths = np.diff(np.append(starts, indices.size))
    return indices[starts], lengths


def encode_labels_rle(s: SegmentationMap) -> bytes:
    """Compress ``s`` losslessly."""
    palette = s.present_labels()
    head = bytes([s.n_classes, palette.size]) + palette.astype(np.uint8).tobytes()

    stream = b""
    if palette.size > 1:
        indices = np.searchsorted(palette, s.labels.ravel())
        values, lengths = label_runs(indices)
        label_models, run_models = _models(palette.size)
        enc = RangeEncoder()
        prev = palette.size
        for value, length in zip(values.tolist(), lengths.tolist()):
            enc.encode_symbol(label_models[prev], value)
            bucket = length.bit_length() - 1
            enc.encode_symbol(run_models[value], bucket)
            enc.encode_bits(length - (1 << bucket), bucket)
            prev = value
        stream = enc.finish()

    body = head + stream
    return body + _CRC.pack(zlib.crc32(body))


def decode_labels_rle(payload: bytes, height: int, width: int, n_classes: int) -> SegmentationMap:
    """Invert :func:`encode_labels_rle` for a map of the given geometry.

    Raises:
        DecodeError: On truncation, checksum mismatch or any inconsistency
            with the expected geometry and class count.
    """
    if len(payload) < 2 + 1 + _CRC.size:
        raise DecodeError(f"label payload too short ({len(payload)} bytes)")
    body, (crc,) = payload[: -_CRC.size], _CRC.unpack(payload[-_CRC.size :])
    if zlib.crc32(body) != crc:
        raise DecodeError("label payload checksum mismatch")

    declared_classes, palette_len = body[0], body[1]
    if declared_classes != n_classes:
        raise DecodeError(f"label payload declares {declared_classes} classes, header {n_classes}")
    if palette_len < 1 or len(body) < 2 + palette_len:
        raise DecodeError("label payload palette is truncated")
    palette = np.frombuffer(body, dtype=np.uint8, count=palette_len, offset=2)
    if np.any(np.diff(palette.astype(np.int16)) <= 0) or palette[-1] >= n_classes:
        raise DecodeError("label payload palette is not an ascending subset of the classes")
    stream = body[2 + palette_len :]

    total = height * width
    if palette_len == 1:
        if stream:
            raise DecodeError("constant label payload carries trailing bytes")
        return SegmentationMap(np.full((height, width), palette[0], dtype=np.uint8), n_classes)

    indices = np.empty(total, dtype=np.uint8)
    label_models, run_models = _models(palette_len)
    dec = RangeDecoder(stream)
    filled = 0
    prev = palette_len
    while filled < total:
        value = dec.decode_symbol(label_models[prev])
        bucket = dec.decode_symbol(run_models[value])
        length = (1 << bucket) + dec.decode_bits(bucket)
        if filled + length > total:
            raise DecodeError("label runs overflow the map geometry")
        indices[filled : filled + length] = value
        filled += length
        prev = value

    return SegmentationMap(palette[indices].reshape(height, width), n_classes)
