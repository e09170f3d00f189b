"""The ``.spic`` container: fixed 19-byte header followed by two payloads.

Header layout (big-endian)::

    offset  size  field
    0       4     magic "SPIC"
    4       1     version
    5       2     width   (full-resolution pixels)
    7       2     height
    9       1     n_classes
    10      1     ssm_codec_id
    11      1     coarse_codec_id
    12      1     coarse_quality
    13      3     ssm_len
    16      3     coarse_len
    19      ...   ssm payload, then coarse payload
"""

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from src.core.errors import (
    BadMagicError,
    BitstreamError,
    LengthMismatchError,
    PayloadTooLargeError,
    TruncatedHeaderError,
    UnsupportedVersionError,
)

MAGIC = b"SPIC"
HEADER_SIZE = 19
SUPPORTED_VERSIONS = frozenset({1})
MAX_PAYLOAD = (1 << 24) - 1
SPIC_SUFFIX = ".spic"


@dataclass(frozen=True)
class BitstreamHeader:
    """Metadata fields of the container, without the payload lengths."""

    width: int
    height: int
    n_classes: int
    ssm_codec_id: int = 0
    coarse_codec_id: int = 0
    coarse_quality: int = 26
    version: int = 1

    def __post_init__(self) -> None:
        if not 1 <= self.width < 1 << 16 or not 1 <= self.height < 1 << 16:
            raise BitstreamError(f"image size {self.width}x{self.height} does not fit the header")
        for name in ("n_classes", "ssm_codec_id", "coarse_codec_id", "coarse_quality", "version"):
            value = getattr(self, name)
            if not 0 <= value <= 255:
                raise BitstreamError(f"{name}={value} does not fit one byte")
        if self.n_classes < 1:
            raise BitstreamError("n_classes must be at least 1")
        if self.version not in SUPPORTED_VERSIONS:
            raise UnsupportedVersionError(f"bitstream version {self.version} is not supported")


@dataclass(frozen=True)
class SemanticBitstream:
    header: BitstreamHeader
    ssm_payload: bytes
    coarse_payload: bytes

    @property
    def ssm_len(self) -> int:
        return len(self.ssm_payload)

    @property
    def coarse_len(self) -> int:
        return len(self.coarse_payload)

    def __len__(self) -> int:
        return HEADER_SIZE + self.ssm_len + self.coarse_len

    def to_bytes(self) -> bytes:
        h = self.header
        return b"".join(
            [
                MAGIC,
                bytes([h.version]),
                h.width.to_bytes(2, "big"),
                h.height.to_bytes(2, "big"),
                bytes([h.n_classes, h.ssm_codec_id, h.coarse_codec_id, h.coarse_quality]),
                self.ssm_len.to_bytes(3, "big"),
                self.coarse_len.to_bytes(3, "big"),
                self.ssm_payload,
                self.coarse_payload,
            ]
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "SemanticBitstream":
        s_bytes, c_bytes, meta = unpack(data)
        return cls(meta, s_bytes, c_bytes)


def pack(s_bytes: bytes, c_bytes: bytes, meta: BitstreamHeader) -> SemanticBitstream:
    """Assemble a container from the two payloads.

    Raises:
        PayloadTooLargeError: If a payload does not fit the 24-bit length field.
    """
    for name, payload in (("ssm", s_bytes), ("coarse", c_bytes)):
        if len(payload) > MAX_PAYLOAD:
            raise PayloadTooLargeError(
                f"{name} payload of {len(payload)} bytes exceeds {MAX_PAYLOAD} bytes"
            )
    return SemanticBitstream(meta, bytes(s_bytes), bytes(c_bytes))


def unpack(bs: bytes) -> tuple[bytes, bytes, BitstreamHeader]:
    """Split a serialized container into (ssm payload, coarse payload, header).

    Raises:
        TruncatedHeaderError: Fewer than 19 bytes.
        BadMagicError: The first four bytes are not ``SPIC``.
        UnsupportedVersionError: Unknown container version.
        LengthMismatchError: Declared lengths disagree with the bytes present.
        BitstreamError: A header field is out of range.
    """
    bs = bytes(bs)
    if len(bs) < HEADER_SIZE:
        raise TruncatedHeaderError(f"need {HEADER_SIZE} header bytes, got {len(bs)}")
    if bs[:4] != MAGIC:
        raise BadMagicError(f"bad magic {bs[:4]!r}")
    version = bs[4]
    if version not in SUPPORTED_VERSIONS:
        raise UnsupportedVersionError(f"bitstream version {version} is not supported")

    ssm_len = int.from_bytes(bs[13:16], "big")
    coarse_len = int.from_bytes(bs[16:19], "big")
    available = len(bs) - HEADER_SIZE
    if ssm_len + coarse_len != available:
        raise LengthMismatchError(
            f"header declares {ssm_len}+{coarse_len} payload bytes, {available} present"
        )

    meta = BitstreamHeader(
        width=int.from_bytes(bs[5:7], "big"),
        height=int.from_bytes(bs[7:9], "big"),
        n_classes=bs[9],
        ssm_codec_id=bs[10],
        coarse_codec_id=bs[11],
        coarse_quality=bs[12],
        version=version,
    )
    s_bytes = bs[HEADER_SIZE : HEADER_SIZE + ssm_len]
    c_bytes = bs[HEADER_SIZE + ssm_len :]
    return s_bytes, c_bytes, meta


@dataclass(frozen=True)
class RateReport:
    """Bits per full-resolution pixel of each part of a bitstream, as exact fractions."""

    bpp_ssm: Fraction
    bpp_coarse: Fraction
    bpp_header: Fraction
    bpp_total: Fraction

    def as_dict(self) -> dict[str, float]:
        return {
            "bpp_total": float(self.bpp_total),
            "bpp_ssm": float(self.bpp_ssm),
            "bpp_coarse": float(self.bpp_coarse),
            "bpp_header": float(self.bpp_header),
        }


def bits_per_pixel(n_bytes: int, w: int, h: int) -> Fraction:
    return Fraction(8 * n_bytes, w * h)


def compute_rate(bs: SemanticBitstream, w: int, h: int) -> RateReport:
    """Rate of ``bs`` for a ``w`` x ``h`` image; the components sum to the total exactly."""
    if w <= 0 or h <= 0:
        raise ValueError(f"image size must be positive, got {w}x{h}")
    ssm = bits_per_pixel(bs.ssm_len, w, h)
    coarse = bits_per_pixel(bs.coarse_len, w, h)
    header = bits_per_pixel(HEADER_SIZE, w, h)
    return RateReport(bpp_ssm=ssm, bpp_coarse=coarse, bpp_header=header, bpp_total=ssm + coarse + header)


def write_spic(bs: SemanticBitstream, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(bs.to_bytes())
    return path


def read_spic(path: str | Path) -> SemanticBitstream:
    return SemanticBitstream.from_bytes(Path(path).read_bytes())
