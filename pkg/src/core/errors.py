"""Exception hierarchy shared by every pipeline stage."""


class SpicError(Exception):
    """Base class for all errors raised by this package."""


class InvalidImageError(SpicError, ValueError):
    """Raster violates a value-range, shape or divisibility invariant."""


class SegmenterError(SpicError):
    """The segmenter failed or returned a map that breaks its contract."""


class CodecError(SpicError):
    """Base class for payload codec failures."""


class DecodeError(CodecError):
    """Payload is truncated, corrupt or inconsistent with its header."""


class UnknownCodecError(CodecError):
    """No codec is registered under the requested id."""


class CodecUnavailableError(CodecError):
    """An external codec tool is not installed."""


class ExternalCodecError(CodecError):
    """An external codec tool exited with an error."""


class ExternalDecodeError(ExternalCodecError, DecodeError):
    """An external decoder rejected its payload or wrote no readable raster."""


class BitstreamError(SpicError):
    """Base class for container-level parse and pack failures."""


class TruncatedHeaderError(BitstreamError):
    """Fewer bytes than a complete header."""


class BadMagicError(BitstreamError):
    """Leading bytes are not the container magic."""


class UnsupportedVersionError(BitstreamError):
    """Container version is not understood by this reader."""


class LengthMismatchError(BitstreamError):
    """Declared payload lengths disagree with the bytes present."""


class PayloadTooLargeError(BitstreamError):
    """A payload does not fit the header's length field."""


class CheckpointError(SpicError):
    """Checkpoint file is missing, unreadable or of an unknown format."""


class DatasetError(SpicError):
    """Dataset root or layout cannot be ingested."""


class InvalidQualityError(CodecError, ValueError):
    """Quality parameter outside the codec's documented scale."""
