"""Transmitter side: segmentation, downscaling, payload codecs and the container."""

from src.encoder.bitstream import (
    HEADER_SIZE,
    BitstreamHeader,
    RateReport,
    SemanticBitstream,
    compute_rate,
    pack,
    read_spic,
    unpack,
    write_spic,
)
from src.encoder.codecs import (
    available_codecs,
    decode_coarse_lossy,
    decode_ssm_lossless,
    encode_coarse_lossy,
    encode_ssm_lossless,
)
from src.encoder.pipeline import DecodedPayload, EncodedImage, EncodeOptions, decode_bitstream, encode_image
from src.encoder.scaling import downscale_average, upscale_coarse
from src.encoder.segmenter import (
    GroundTruthSegmenter,
    PrototypeSegmenter,
    SegmenterInterface,
    build_segmenter,
    segment,
)

__all__ = [
    "HEADER_SIZE",
    "BitstreamHeader",
    "DecodedPayload",
    "EncodeOptions",
    "EncodedImage",
    "GroundTruthSegmenter",
    "PrototypeSegmenter",
    "RateReport",
    "SegmenterInterface",
    "SemanticBitstream",
    "available_codecs",
    "build_segmenter",
    "compute_rate",
    "decode_bitstream",
    "decode_coarse_lossy",
    "decode_ssm_lossless",
    "downscale_average",
    "encode_coarse_lossy",
    "encode_image",
    "encode_ssm_lossless",
    "pack",
    "read_spic",
    "segment",
    "unpack",
    "upscale_coarse",
    "write_spic",
]
