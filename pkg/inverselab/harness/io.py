"""PGM images, CSV tables and flat config files."""

import io
import logging
import re
from pathlib import Path

import numpy as np
import pandas as pd

from inverselab.config import get_settings
from inverselab.harness.schemas import (
    ConfigFileError,
    ExperimentConfig,
    ImageBuffer,
    PgmFormatError,
)
from inverselab.utils import atomic_write_bytes, atomic_write_text

logger = logging.getLogger(__name__)

PGM_MAGIC = b"P5"
LIST_KEYS = frozenset({"k_values", "alphas"})
RANGE_COMMENT = re.compile(rb"#\s*range\s+(\S+)\s+(\S+)")


# --- PGM ---


def encode_pgm(img: ImageBuffer, maxval: int | None = None) -> bytes:
    """Binary PGM with linear scaling of [lo, hi] onto [0, maxval].

    The display range is kept in a ``# range lo hi`` header comment so
    :func:`decode_pgm` can undo the scaling.
    """
    maxval = maxval or get_settings().pgm_maxval
    scaled = (img.values - img.lo) / (img.hi - img.lo) * maxval
    pixels = np.clip(np.rint(scaled), 0, maxval).astype(">u2" if maxval > 255 else "u1")
    header = (
        f"P5\n# range {float(img.lo):.17g} {float(img.hi):.17g}\n"
        f"{img.width} {img.height}\n{maxval}\n"
    ).encode("ascii")
    return header + pixels.tobytes()


def _next_token(data: bytes, pos: int) -> tuple[bytes, int, int]:
    """Next header token, skipping whitespace and comments; returns (token, start, end)."""
    n = len(data)
    while pos < n:
        if data[pos : pos + 1].isspace():
            pos += 1
        elif data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise PgmFormatError(start, "unexpected end of header")
    return data[start:pos], start, pos


def _header_int(data: bytes, pos: int, what: str) -> tuple[int, int]:
    token, start, end = _next_token(data, pos)
    if not token.isdigit():
        raise PgmFormatError(start, f"{what} must be a positive integer, found {token!r}")
    value = int(token)
    if value < 1:
        raise PgmFormatError(start, f"{what} must be positive")
    return value, end


def decode_pgm(data: bytes) -> ImageBuffer:
    """Parse a binary PGM.

    Raises:
        PgmFormatError: With the byte offset of the first problem.
    """
    if data[:2] != PGM_MAGIC:
        raise PgmFormatError(0, f"expected magic {PGM_MAGIC!r}, found {data[:2]!r}")
    width, pos = _header_int(data, 2, "width")
    height, pos = _header_int(data, pos, "height")
    maxval, pos = _header_int(data, pos, "maxval")
    if maxval > 65535:
        raise PgmFormatError(pos - 1, f"maxval {maxval} exceeds 65535")
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise PgmFormatError(pos, "expected a single whitespace byte before pixel data")
    pos += 1

    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    need = width * height * dtype.itemsize
    available = len(data) - pos
    if available < need:
        raise PgmFormatError(len(data), f"pixel data truncated: {available} of {need} bytes")
    if available > need:
        raise PgmFormatError(pos + need, f"{available - need} trailing bytes after pixel data")
    pixels = np.frombuffer(data, dtype=dtype, count=width * height, offset=pos)
    if np.any(pixels > maxval):
        bad = int(np.argmax(pixels > maxval))
        raise PgmFormatError(pos + bad * dtype.itemsize, f"pixel exceeds maxval {maxval}")

    lo, hi = 0.0, 1.0
    match = RANGE_COMMENT.search(data[:pos])
    if match:
        try:
            lo, hi = float(match.group(1)), float(match.group(2))
        except ValueError as e:
            raise PgmFormatError(match.start(), "unreadable range comment") from e
    values = lo + pixels.reshape(height, width).astype(float) / maxval * (hi - lo)
    return ImageBuffer(values=values, lo=lo, hi=hi)


def write_pgm(img: ImageBuffer, path: str | Path) -> Path:
    """Write ``img`` as a 16-bit binary PGM."""
    target = atomic_write_bytes(path, encode_pgm(img))
    logger.info(f"Wrote {target}")
    return target


def read_pgm(path: str | Path) -> ImageBuffer:
    """Read a binary PGM written by :func:`write_pgm` or any P5 writer."""
    return decode_pgm(Path(path).read_bytes())


# --- CSV ---


def format_csv(table: pd.DataFrame) -> str:
    """CSV text with LF endings and 17 significant digits."""
    buffer = io.StringIO()
    table.to_csv(
        buffer,
        index=False,
        float_format=get_settings().csv_float_format,
        lineterminator="\n",
    )
    return buffer.getvalue()


def write_csv(table: pd.DataFrame, path: str | Path) -> Path:
    """Write a result table atomically."""
    target = atomic_write_text(path, format_csv(table))
    logger.info(f"Wrote {target} ({len(table)} rows)")
    return target


# --- Config files ---


def parse_config_text(text: str) -> dict[str, object]:
    """Parse flat ``key = value`` lines.

    Blank lines and ``#`` comments are skipped. ``k_values`` and ``alphas``
    take comma-separated lists. Keys must be :class:`ExperimentConfig` fields.

    Raises:
        ConfigFileError: On malformed lines, unknown or repeated keys.
    """
    allowed = set(ExperimentConfig.model_fields) - {"experiment"}
    values: dict[str, object] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigFileError(line_no, f"expected 'key = value', found {raw.strip()!r}")
        if key not in allowed:
            raise ConfigFileError(line_no, f"unknown key {key!r}")
        if key in values:
            raise ConfigFileError(line_no, f"key {key!r} given twice")
        if key in LIST_KEYS:
            values[key] = [item.strip() for item in value.split(",") if item.strip()]
        else:
            values[key] = value
    return values


def read_config_file(path: str | Path) -> dict[str, object]:
    """Read and parse a flat config file."""
    return parse_config_text(Path(path).read_text(encoding="utf-8"))
