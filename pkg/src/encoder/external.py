"""Adapters for the off-the-shelf codecs (codec id 1).

Each call works in its own temporary directory, so concurrent calls never
share files. Argument mapping:

- FLIF (label maps): ``flif -e in.png out.flif`` / ``flif -d in.flif out.png``;
  the map is written as a single-channel 8-bit PNG of raw labels.
- BPG (coarse images): ``bpgenc -q QP -o out.bpg in.png`` /
  ``bpgdec -o out.png in.bpg`` with ``QP = 51 - quality``.

A decoder that fails or writes nothing raises :class:`ExternalDecodeError`,
which callers can catch as an ordinary :class:`DecodeError`.
"""

import shutil
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from loguru import logger
from PIL import Image as PILImage

from src.core.errors import (
    CodecUnavailableError,
    DecodeError,
    ExternalCodecError,
    ExternalDecodeError,
)
from src.core.io import from_uint8, to_uint8
from src.encoder.coarse_codec import MAX_QUALITY, check_quality


@dataclass(frozen=True)
class ExternalTool:
    binary: str

    def which(self) -> str | None:
        return shutil.which(self.binary)

    def available(self) -> bool:
        return self.which() is not None

    def run(self, *args: str | Path, failure: type[ExternalCodecError] = ExternalCodecError) -> None:
        exe = self.which()
        if exe is None:
            raise CodecUnavailableError(f"{self.binary} is not installed or not on PATH")
        cmd = [exe, *map(str, args)]
        logger.debug(f"Running {' '.join(cmd)}")
        proc = subprocess.run(cmd, capture_output=True, text=True, check=False)
        if proc.returncode != 0:
            raise failure(f"{self.binary} exited with {proc.returncode}: {proc.stderr.strip()[:500]}")


def read_decoded_png(path: Path, mode: str, tool: str) -> np.ndarray:
    """Load what a decoder wrote; a missing or unreadable file is a decode failure."""
    try:
        with PILImage.open(path) as pil:
            return np.asarray(pil.convert(mode), dtype=np.uint8)
    except OSError as e:
        raise ExternalDecodeError(f"{tool} wrote no readable raster: {e}") from e


def bpg_qp(quality: int) -> int:
    """BPG quantizer for a higher-is-better quality in [1, 51]."""
    return MAX_QUALITY - check_quality(quality)


class FlifAdapter:
    """Lossless label-raster coding through the ``flif`` command-line tool."""

    def __init__(self, binary: str = "flif"):
        self.tool = ExternalTool(binary)

    def available(self) -> bool:
        return self.tool.available()

    def encode(self, labels: np.ndarray) -> bytes:
        with tempfile.TemporaryDirectory(prefix="spic-flif-") as tmp:
            src, dst = Path(tmp) / "in.png", Path(tmp) / "out.flif"
            PILImage.fromarray(np.ascontiguousarray(labels, dtype=np.uint8)).save(src)
            self.tool.run("-e", src, dst)
            return dst.read_bytes()

    def decode(self, payload: bytes, height: int, width: int) -> np.ndarray:
        with tempfile.TemporaryDirectory(prefix="spic-flif-") as tmp:
            src, dst = Path(tmp) / "in.flif", Path(tmp) / "out.png"
            src.write_bytes(payload)
            self.tool.run("-d", src, dst, failure=ExternalDecodeError)
            labels = read_decoded_png(dst, "L", self.tool.binary)
        if labels.shape != (height, width):
            raise DecodeError(f"flif produced {labels.shape}, expected {(height, width)}")
        return labels


class BpgAdapter:
    """Lossy RGB coding through ``bpgenc`` / ``bpgdec``."""

    def __init__(self, encoder: str = "bpgenc", decoder: str = "bpgdec"):
        self.encoder = ExternalTool(encoder)
        self.decoder = ExternalTool(decoder)

    def available(self) -> bool:
        return self.encoder.available() and self.decoder.available()

    def encode(self, pixels: np.ndarray, quality: int) -> bytes:
        qp = bpg_qp(quality)
        with tempfile.TemporaryDirectory(prefix="spic-bpg-") as tmp:
            src, dst = Path(tmp) / "in.png", Path(tmp) / "out.bpg"
            PILImage.fromarray(to_uint8(pixels)).save(src)
            self.encoder.run("-q", qp, "-o", dst, src)
            return dst.read_bytes()

    def decode(self, payload: bytes, height: int, width: int) -> np.ndarray:
        with tempfile.TemporaryDirectory(prefix="spic-bpg-") as tmp:
            src, dst = Path(tmp) / "in.bpg", Path(tmp) / "out.png"
            src.write_bytes(payload)
            self.decoder.run("-o", dst, src, failure=ExternalDecodeError)
            raw = read_decoded_png(dst, "RGB", self.decoder.binary)
        if raw.shape[:2] != (height, width):
            raise DecodeError(f"bpgdec produced {raw.shape[:2]}, expected {(height, width)}")
        return from_uint8(raw)
