"""Transmitter and receiver front halves: image to bitstream and back to (SSM, coarse)."""

from dataclasses import dataclass

from loguru import logger

from src.config.settings import settings
from src.core.types import CoarseImage, Image, SegmentationMap
from src.encoder.bitstream import BitstreamHeader, RateReport, SemanticBitstream, compute_rate, pack
from src.encoder.codecs import (
    decode_coarse_lossy,
    decode_ssm_lossless,
    encode_coarse_lossy,
    encode_ssm_lossless,
)
from src.encoder.scaling import downscale_average
from src.encoder.segmenter import SegmenterInterface, segment


@dataclass(frozen=True)
class EncodeOptions:
    quality: int
    factor: int
    ssm_codec_id: int = 0
    coarse_codec_id: int = 0
    version: int = 1

    @classmethod
    def from_settings(cls, **overrides) -> "EncodeOptions":
        values = {
            "quality": settings.coarse_quality,
            "factor": settings.downscale_factor,
            "ssm_codec_id": settings.ssm_codec_id,
            "coarse_codec_id": settings.coarse_codec_id,
            "version": settings.bitstream_version,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


@dataclass(frozen=True)
class EncodedImage:
    bitstream: SemanticBitstream
    segmentation: SegmentationMap
    coarse: CoarseImage
    rate: RateReport


@dataclass(frozen=True)
class DecodedPayload:
    header: BitstreamHeader
    segmentation: SegmentationMap
    coarse: CoarseImage
    rate: RateReport
    factor: int


def encode_image(
    x: Image, segmenter: SegmenterInterface, options: EncodeOptions | None = None
) -> EncodedImage:
    """Segment, downscale, compress both parts and pack them into a container."""
    options = options or EncodeOptions.from_settings()
    x.require_divisible(options.factor)

    s = segment(x, segmenter)
    c = downscale_average(x, options.factor)
    s_bytes = encode_ssm_lossless(s, options.ssm_codec_id)
    c_bytes = encode_coarse_lossy(c, options.quality, options.coarse_codec_id)

    meta = BitstreamHeader(
        width=x.width,
        height=x.height,
        n_classes=s.n_classes,
        ssm_codec_id=options.ssm_codec_id,
        coarse_codec_id=options.coarse_codec_id,
        coarse_quality=options.quality,
        version=options.version,
    )
    bs = pack(s_bytes, c_bytes, meta)
    rate = compute_rate(bs, x.width, x.height)
    logger.debug(
        f"Encoded {x.width}x{x.height}: ssm {bs.ssm_len} B, coarse {bs.coarse_len} B "
        f"at quality {options.quality}"
    )
    return EncodedImage(bitstream=bs, segmentation=s, coarse=c, rate=rate)


def decode_bitstream(data: bytes | SemanticBitstream, factor: int | None = None) -> DecodedPayload:
    """Parse a container and decode both payloads (everything the receiver has before sampling)."""
    factor = factor or settings.downscale_factor
    bs = data if isinstance(data, SemanticBitstream) else SemanticBitstream.from_bytes(data)
    coarse = decode_coarse_lossy(bs.coarse_payload, bs.header, factor)
    s = decode_ssm_lossless(bs.ssm_payload, bs.header)
    rate = compute_rate(bs, bs.header.width, bs.header.height)
    return DecodedPayload(header=bs.header, segmentation=s, coarse=coarse, rate=rate, factor=factor)
