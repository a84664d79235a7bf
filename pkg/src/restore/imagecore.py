"""Image container conventions, patch extraction and PGM/PNG I/O.

Images are plain 2-D ``numpy.float64`` arrays in row-major (raster scan)
order. Integer pixel formats only exist at the file boundary: a byte value
``p`` loads as the real value ``p``, and on save every real is clamped to
[0, 255] and rounded half away from zero.
"""
from __future__ import annotations

import os
import re
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ImageFormatError, ShapeError

__all__ = [
    "Patch",
    "as_image",
    "extract_patch",
    "load_image",
    "save_image",
    "to_bytes",
]


def as_image(data, copy: bool = False) -> np.ndarray:
    """Validate ``data`` as an image grid and return it as float64.

    Raises ShapeError unless ``data`` is 2-D with at least one row and one
    column, and DomainError if any value is NaN or infinite.
    """
    img = np.array(data, dtype=np.float64) if copy else np.asarray(data, dtype=np.float64)
    if img.ndim != 2:
        raise ShapeError(f"image must be 2-D, got {img.ndim}-D")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ShapeError(f"image must be at least 1x1, got {img.shape}")
    if not np.all(np.isfinite(img)):
        raise DomainError("image contains NaN or Inf values")
    return img


@dataclass(frozen=True)
class Patch:
    """A square odd-width window copied out of an image."""

    width: int
    values: np.ndarray  # flat, row-major, length width**2
    center_row: int
    center_col: int

    def as_array(self) -> np.ndarray:
        return self.values.reshape(self.width, self.width)


def extract_patch(img, r: int, c: int, w: int) -> Patch:
    """Copy the ``w x w`` window centred at ``(r, c)``.

    The window must lie entirely inside the image; no padding is done.
    """
    img = as_image(img)
    if w < 1 or w % 2 == 0:
        raise ShapeError(f"patch width must be a positive odd integer, got {w}")
    h = w // 2
    rows, cols = img.shape
    if r - h < 0 or c - h < 0 or r + h >= rows or c + h >= cols:
        raise IndexError(
            f"{w}x{w} window at ({r}, {c}) overruns {rows}x{cols} image"
        )
    values = img[r - h:r + h + 1, c - h:c + h + 1].ravel().copy()
    return Patch(width=w, values=values, center_row=r, center_col=c)


def to_bytes(img) -> np.ndarray:
    """Clamp to [0, 255] and round half away from zero to uint8."""
    img = as_image(img)
    clipped = np.clip(img, 0.0, 255.0)
    # values are nonnegative after clamping, so floor(v + 0.5) rounds half away from zero
    return np.floor(clipped + 0.5).astype(np.uint8)


# --- PGM -------------------------------------------------------------------

_PGM_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _read_pgm(raw: bytes) -> np.ndarray:
    if not raw.startswith(b"P5"):
        raise ImageFormatError("not a binary PGM (missing P5 magic)")
    pos = 2
    fields = []
    for _ in range(3):
        m = _PGM_TOKEN.match(raw, pos)
        if m is None:
            raise ImageFormatError("truncated PGM header")
        try:
            fields.append(int(m.group(1)))
        except ValueError:
            raise ImageFormatError(f"bad PGM header field {m.group(1)!r}") from None
        pos = m.end()
    cols, rows, maxval = fields
    if cols < 1 or rows < 1:
        raise ImageFormatError(f"bad PGM dimensions {cols}x{rows}")
    if maxval != 255:
        raise ImageFormatError(f"only maxval 255 is supported, got {maxval}")
    # exactly one whitespace byte separates the header from the raster
    if pos >= len(raw) or not raw[pos:pos + 1].isspace():
        raise ImageFormatError("missing whitespace after PGM header")
    pos += 1
    n = rows * cols
    body = raw[pos:pos + n]
    if len(body) < n:
        raise OSError(f"truncated PGM raster: expected {n} bytes, got {len(body)}")
    return np.frombuffer(body, dtype=np.uint8).reshape(rows, cols).astype(np.float64)


def _write_pgm(img8: np.ndarray, path) -> None:
    rows, cols = img8.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(img8).tobytes())


# --- PNG -------------------------------------------------------------------

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def _read_png(path) -> np.ndarray:
    from PIL import Image

    with Image.open(path) as im:
        if im.mode != "L":
            raise ImageFormatError(f"expected 8-bit grayscale PNG, got mode {im.mode!r}")
        try:
            arr = np.asarray(im, dtype=np.uint8)
        except OSError as exc:
            raise OSError(f"truncated PNG data: {exc}") from exc
    return arr.astype(np.float64)


def _write_png(img8: np.ndarray, path) -> None:
    from PIL import Image

    Image.fromarray(img8, mode="L").save(path, format="PNG")


def _is_png_path(path) -> bool:
    return os.fspath(path).lower().endswith(".png")


def load_image(path) -> np.ndarray:
    """Read a binary PGM (P5, maxval 255) or 8-bit grayscale PNG."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw.startswith(_PNG_MAGIC):
        return _read_png(path)
    return _read_pgm(raw)


def save_image(img, path) -> None:
    """Write ``img`` as PGM, or PNG when the path ends in ``.png``."""
    img8 = to_bytes(img)
    if _is_png_path(path):
        _write_png(img8, path)
    else:
        _write_pgm(img8, path)
