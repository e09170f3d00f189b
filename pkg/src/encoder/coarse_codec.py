"""Reference lossy RGB coder (codec id 0): 8x8 block DCT, uniform quantisation,
adaptive arithmetic coding.

Quality runs from 1 (coarsest) to 51 (finest). The AC quantiser step doubles
every 6 quality points; the DC step is capped at ``DC_STEP_CAP`` so flat
regions stay within half a grey level at any quality.

Payload layout::

    width    u16 BE
    height   u16 BE
    quality  u8
    stream   bytes      per channel, per block (row-major): DC delta, AC run
    crc32    u32 BE     over every preceding byte

Each coefficient is coded JPEG-style as a magnitude category (its bit
length) from an adaptive model, then a sign bit and the remaining mantissa
bits raw. AC coefficients are coded in zigzag order up to the last non-zero
one, whose position is coded first.
"""

import struct
import zlib

import numpy as np
from scipy.fft import dctn, idctn

from src.core.errors import DecodeError, InvalidQualityError
from src.encoder.range_coder import AdaptiveModel, RangeDecoder, RangeEncoder

BLOCK = 8
MIN_QUALITY = 1
MAX_QUALITY = 51
BASE_STEP = 0.625
DC_STEP_CAP = 8.0
CATEGORIES = 24
# Zigzag positions 1.. are split into frequency bands, one AC model each.
AC_BANDS = (1, 3, 6, 15, 28, 64)

_HEAD = struct.Struct(">HHB")
_CRC = struct.Struct(">I")


def _zigzag(n: int = BLOCK) -> np.ndarray:
    cells = sorted(
        ((i, j) for i in range(n) for j in range(n)),
        key=lambda c: (c[0] + c[1], c[0] if (c[0] + c[1]) % 2 else -c[0]),
    )
    return np.array([i * n + j for i, j in cells], dtype=np.int64)


ZIGZAG = _zigzag()
_BAND_OF = np.searchsorted(AC_BANDS, np.arange(BLOCK * BLOCK), side="right") - 1


def check_quality(quality: int) -> int:
    if not MIN_QUALITY <= int(quality) <= MAX_QUALITY:
        raise InvalidQualityError(
            f"quality must be an integer in [{MIN_QUALITY}, {MAX_QUALITY}], got {quality}"
        )
    return int(quality)


def quantizer_steps(quality: int) -> tuple[float, float]:
    """(dc_step, ac_step) in 8-bit units for ``quality``."""
    ac = BASE_STEP * 2.0 ** ((MAX_QUALITY - check_quality(quality)) / 6.0)
    return min(ac, DC_STEP_CAP), ac


class _Models:
    def __init__(self) -> None:
        self.dc = AdaptiveModel(CATEGORIES)
        self.last = AdaptiveModel(BLOCK * BLOCK)
        self.ac = [AdaptiveModel(CATEGORIES) for _ in range(len(AC_BANDS) - 1)]


def _blocks(pixels: np.ndarray) -> np.ndarray:
    """(H, W, 3) in [0, 1] -> (3, by, bx, 64) level-shifted 8-bit samples."""
    h, w, _ = pixels.shape
    pad_h, pad_w = -h % BLOCK, -w % BLOCK
    padded = np.pad(pixels, ((0, pad_h), (0, pad_w), (0, 0)), mode="edge") * 255.0 - 128.0
    by, bx = padded.shape[0] // BLOCK, padded.shape[1] // BLOCK
    tiles = padded.reshape(by, BLOCK, bx, BLOCK, 3).transpose(4, 0, 2, 1, 3)
    return tiles.reshape(3, by, bx, BLOCK * BLOCK)


def _unblocks(tiles: np.ndarray, height: int, width: int) -> np.ndarray:
    _, by, bx, _ = tiles.shape
    planes = tiles.reshape(3, by, bx, BLOCK, BLOCK).transpose(1, 3, 2, 4, 0)
    full = planes.reshape(by * BLOCK, bx * BLOCK, 3)[:height, :width]
    return np.clip((full + 128.0) / 255.0, 0.0, 1.0)


def _encode_value(enc: RangeEncoder, model: AdaptiveModel, value: int) -> None:
    magnitude = abs(value)
    category = magnitude.bit_length()
    if category >= CATEGORIES:
        raise ValueError(f"coefficient {value} exceeds the coder's magnitude range")
    enc.encode_symbol(model, category)
    if category:
        enc.encode_bits(1 if value < 0 else 0, 1)
        enc.encode_bits(magnitude - (1 << (category - 1)), category - 1)


def _decode_value(dec: RangeDecoder, model: AdaptiveModel) -> int:
    category = dec.decode_symbol(model)
    if not category:
        return 0
    negative = dec.decode_bits(1)
    magnitude = (1 << (category - 1)) + dec.decode_bits(category - 1)
    return -magnitude if negative else magnitude


def quantize(pixels: np.ndarray, quality: int) -> np.ndarray:
    """Quantised zigzag-ordered coefficients, shape (3, by, bx, 64)."""
    dc_step, ac_step = quantizer_steps(quality)
    tiles = _blocks(pixels)
    shape = tiles.shape
    coeffs = dctn(tiles.reshape(*shape[:3], BLOCK, BLOCK), type=2, norm="ortho", axes=(-2, -1))
    zz = coeffs.reshape(shape)[..., ZIGZAG]
    zz[..., 0] /= dc_step
    zz[..., 1:] /= ac_step
    return np.rint(zz).astype(np.int64)


def dequantize(levels: np.ndarray, quality: int, height: int, width: int) -> np.ndarray:
    dc_step, ac_step = quantizer_steps(quality)
    zz = levels.astype(np.float64)
    zz[..., 0] *= dc_step
    zz[..., 1:] *= ac_step
    coeffs = np.empty_like(zz)
    coeffs[..., ZIGZAG] = zz
    shape = coeffs.shape
    tiles = idctn(coeffs.reshape(*shape[:3], BLOCK, BLOCK), type=2, norm="ortho", axes=(-2, -1))
    return _unblocks(tiles.reshape(shape), height, width)


def encode_dct(pixels: np.ndarray, quality: int) -> bytes:
    """Compress an (H, W, 3) [0, 1] raster at ``quality``."""
    height, width = pixels.shape[:2]
    if not (0 < height < 1 << 16 and 0 < width < 1 << 16):
        raise ValueError(f"raster {height}x{width} does not fit the payload header")
    levels = quantize(pixels, quality)
    models = _Models()
    enc = RangeEncoder()
    for channel in levels:
        prev_dc = 0
        for block in channel.reshape(-1, BLOCK * BLOCK).tolist():
            _encode_value(enc, models.dc, block[0] - prev_dc)
            prev_dc = block[0]
            nonzero = [k for k in range(1, BLOCK * BLOCK) if block[k]]
            last = nonzero[-1] if nonzero else 0
            enc.encode_symbol(models.last, last)
            for k in range(1, last + 1):
                _encode_value(enc, models.ac[_BAND_OF[k]], block[k])
    body = _HEAD.pack(width, height, quality) + enc.finish()
    return body + _CRC.pack(zlib.crc32(body))


def decode_dct(
    payload: bytes,
    size: tuple[int, int] | None = None,
    expected_quality: int | None = None,
) -> tuple[np.ndarray, int]:
    """Invert :func:`encode_dct`; returns the raster and the quality it was coded at.

    ``size`` is the (height, width) the caller expects and ``expected_quality``
    the quality it recorded; both are checked against the payload's own
    header before any block storage is allocated.

    Raises:
        DecodeError: On truncation, checksum mismatch, malformed fields or a
            payload header that disagrees with ``size``/``expected_quality``.
    """
    if len(payload) < _HEAD.size + _CRC.size:
        raise DecodeError(f"DCT payload too short ({len(payload)} bytes)")
    body, (crc,) = payload[: -_CRC.size], _CRC.unpack(payload[-_CRC.size :])
    if zlib.crc32(body) != crc:
        raise DecodeError("DCT payload checksum mismatch")
    width, height, quality = _HEAD.unpack_from(body)
    if width == 0 or height == 0 or not MIN_QUALITY <= quality <= MAX_QUALITY:
        raise DecodeError(f"DCT payload header is invalid ({width}x{height}, quality {quality})")
    if size is not None and (height, width) != tuple(size):
        raise DecodeError(f"lossy payload is {width}x{height}, expected {size[1]}x{size[0]}")
    if expected_quality is not None and quality != expected_quality:
        raise DecodeError(f"lossy payload coded at quality {quality}, header says {expected_quality}")

    by, bx = -(-height // BLOCK), -(-width // BLOCK)
    levels = np.zeros((3, by * bx, BLOCK * BLOCK), dtype=np.int64)
    models = _Models()
    dec = RangeDecoder(body[_HEAD.size :])
    for channel in range(3):
        prev_dc = 0
        for b in range(by * bx):
            prev_dc += _decode_value(dec, models.dc)
            levels[channel, b, 0] = prev_dc
            last = dec.decode_symbol(models.last)
            for k in range(1, last + 1):
                levels[channel, b, k] = _decode_value(dec, models.ac[_BAND_OF[k]])
    pixels = dequantize(levels.reshape(3, by, bx, BLOCK * BLOCK), quality, height, width)
    return pixels, quality
