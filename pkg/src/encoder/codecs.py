"""Payload codecs selected by the ids stored in the container header.

=====  ====================  ===================
id     SSM (lossless)        coarse (lossy)
=====  ====================  ===================
0      reference RLE coder   reference DCT coder
1      FLIF adapter          BPG adapter
=====  ====================  ===================
"""

import numpy as np

from src.config.settings import settings
from src.core.errors import DecodeError, InvalidImageError, UnknownCodecError
from src.core.types import CoarseImage, SegmentationMap
from src.encoder.bitstream import BitstreamHeader
from src.encoder.coarse_codec import check_quality, decode_dct, encode_dct
from src.encoder.external import BpgAdapter, FlifAdapter
from src.encoder.ssm_codec import decode_labels_rle, encode_labels_rle

REFERENCE = 0
EXTERNAL = 1

SSM_CODECS = {REFERENCE: "reference-rle", EXTERNAL: "flif"}
COARSE_CODECS = {REFERENCE: "reference-dct", EXTERNAL: "bpg"}


def _flif() -> FlifAdapter:
    return FlifAdapter(settings.flif_binary)


def _bpg() -> BpgAdapter:
    return BpgAdapter(settings.bpgenc_binary, settings.bpgdec_binary)


def _check_id(codec_id: int, table: dict[int, str], kind: str) -> None:
    if codec_id not in table:
        raise UnknownCodecError(f"no {kind} codec with id {codec_id} (known: {sorted(table)})")


def available_codecs() -> dict[str, dict[str, bool]]:
    """Which codecs can run on this machine, by payload kind and codec name."""
    return {
        "ssm": {SSM_CODECS[REFERENCE]: True, SSM_CODECS[EXTERNAL]: _flif().available()},
        "coarse": {COARSE_CODECS[REFERENCE]: True, COARSE_CODECS[EXTERNAL]: _bpg().available()},
    }


def encode_ssm_lossless(s: SegmentationMap, codec_id: int = REFERENCE) -> bytes:
    """Compress a label map without loss."""
    _check_id(codec_id, SSM_CODECS, "SSM")
    if codec_id == REFERENCE:
        return encode_labels_rle(s)
    return _flif().encode(s.labels)


def decode_ssm_lossless(b: bytes, header: BitstreamHeader) -> SegmentationMap:
    """Recover the label map described by ``header``.

    Raises:
        DecodeError: If the payload is truncated, corrupt or disagrees with the header.
    """
    _check_id(header.ssm_codec_id, SSM_CODECS, "SSM")
    if header.ssm_codec_id == REFERENCE:
        return decode_labels_rle(b, header.height, header.width, header.n_classes)
    labels = _flif().decode(b, header.height, header.width)
    try:
        return SegmentationMap(labels, header.n_classes)
    except InvalidImageError as e:
        raise DecodeError(f"decoded label map is invalid: {e}") from e


def encode_lossy(pixels: np.ndarray, quality: int, codec_id: int = REFERENCE) -> bytes:
    """Compress any (H, W, 3) [0, 1] raster with the selected lossy codec."""
    _check_id(codec_id, COARSE_CODECS, "lossy")
    check_quality(quality)
    if codec_id == REFERENCE:
        return encode_dct(pixels, quality)
    return _bpg().encode(pixels, quality)


def decode_lossy(
    b: bytes, height: int, width: int, quality: int, codec_id: int = REFERENCE
) -> np.ndarray:
    """Invert :func:`encode_lossy` for a raster of known size and quality."""
    _check_id(codec_id, COARSE_CODECS, "lossy")
    if codec_id == REFERENCE:
        return decode_dct(b, (height, width), quality)[0]
    return _bpg().decode(b, height, width)


def encode_coarse_lossy(c: CoarseImage, quality: int, codec_id: int = REFERENCE) -> bytes:
    """Compress the coarse image at ``quality`` (1 coarsest, 51 finest)."""
    return encode_lossy(c.pixels, quality, codec_id)


def coarse_size(header: BitstreamHeader, factor: int) -> tuple[int, int]:
    """(height, width) of the coarse image implied by the header."""
    if header.width % factor or header.height % factor:
        raise DecodeError(
            f"header size {header.width}x{header.height} is not divisible by factor {factor}"
        )
    return header.height // factor, header.width // factor


def decode_coarse_lossy(b: bytes, header: BitstreamHeader, factor: int | None = None) -> CoarseImage:
    """Recover the coarse image; its size is the header size divided by ``factor``."""
    factor = factor or settings.downscale_factor
    h, w = coarse_size(header, factor)
    pixels = decode_lossy(b, h, w, header.coarse_quality, header.coarse_codec_id)
    return CoarseImage(pixels)
