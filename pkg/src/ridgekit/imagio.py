"""Image model, file I/O, grayscale conversion, exposure fusion and ROI cropping.

Images are plain numpy arrays throughout the package:

* gray image: ``(height, width)`` array of ``uint8``
* RGB image:  ``(height, width, 3)`` array of ``uint8``

Supported on-disk formats are binary PGM (P5), binary PPM (P6) and 8-bit PNG.
FVC TIFF files have to be converted beforehand, e.g. with
``python -c "from PIL import Image; Image.open('1_1.tif').convert('L').save('1_1.pgm')"``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

PathLike = Union[str, os.PathLike]

# Well-exposedness weight parameters (normalized intensity units).
EXPOSURE_MID = 0.5
EXPOSURE_SIGMA = 0.2


class ImageFormatError(ValueError):
    """Raised when an image file is malformed or uses an unsupported encoding."""


@dataclass(frozen=True)
class Roi:
    """Axis-aligned rectangle; may extend beyond the image it is applied to."""

    x0: int
    y0: int
    width: int
    height: int

    def __post_init__(self):
        if self.x0 < 0 or self.y0 < 0:
            raise ValueError(f"ROI origin must be non-negative, got ({self.x0}, {self.y0})")
        if self.width < 1 or self.height < 1:
            raise ValueError(f"ROI extent must be >= 1, got {self.width}x{self.height}")


def round_half_up(values):
    """Round to nearest integer with halves going up (all callers pass values >= 0)."""
    return np.floor(np.asarray(values, dtype=np.float64) + 0.5)


def as_gray(img) -> np.ndarray:
    """Validate and return ``img`` as a 2-D uint8 array."""
    arr = np.asarray(img)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D gray image, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError("image must be at least 1x1")
    if arr.dtype != np.uint8:
        if np.any(arr < 0) or np.any(arr > 255):
            raise ValueError("gray intensities must lie in [0, 255]")
        arr = arr.astype(np.uint8)
    return arr


# ---------------------------------------------------------------------------
# Netpbm / PNG I/O
# ---------------------------------------------------------------------------

def _read_netpbm(raw: bytes, path: PathLike) -> np.ndarray:
    magic = raw[:2]
    channels = 1 if magic == b"P5" else 3
    tokens = []
    pos = 2
    # Header: magic, width, height, maxval separated by whitespace; '#' comments allowed.
    while len(tokens) < 3:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ImageFormatError(f"{path}: truncated {magic.decode()} header")
        tokens.append(raw[start:pos])
    # exactly one whitespace byte separates the header from the raster
    pos += 1
    header = b" ".join([magic, *tokens]).decode("ascii", "replace")
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise ImageFormatError(f"{path}: malformed header '{header}'") from None
    if width < 1 or height < 1:
        raise ImageFormatError(f"{path}: invalid dimensions in header '{header}'")
    if maxval != 255:
        raise ImageFormatError(f"{path}: unsupported maxval in header '{header}' (only 255)")
    expected = width * height * channels
    data = raw[pos : pos + expected]
    if len(data) < expected:
        raise ImageFormatError(
            f"{path}: header '{header}' promises {expected} bytes, found {len(data)}"
        )
    arr = np.frombuffer(data, dtype=np.uint8).copy()
    return arr.reshape((height, width) if channels == 1 else (height, width, 3))


def _read_png(path: PathLike) -> np.ndarray:
    from PIL import Image

    with Image.open(path) as im:
        mode = im.mode
        if mode == "L":
            return np.array(im, dtype=np.uint8)
        if mode == "RGB":
            return np.array(im, dtype=np.uint8)
        if mode in ("RGBA", "P", "LA"):
            target = "L" if mode == "LA" else "RGB"
            return np.array(im.convert(target), dtype=np.uint8)
        raise ImageFormatError(f"{path}: unsupported PNG mode '{mode}' (need 8-bit L or RGB)")


def load_image(path: PathLike) -> np.ndarray:
    """Decode a PGM, PPM or PNG file.

    Returns a 2-D array for grayscale files and an ``(h, w, 3)`` array for colour
    files. Raises ``OSError`` if the file cannot be read and
    :class:`ImageFormatError` for unsupported or truncated content.
    """
    raw = Path(path).read_bytes()
    if raw[:2] in (b"P5", b"P6"):
        return _read_netpbm(raw, path)
    if raw[:8] == b"\x89PNG\r\n\x1a\n":
        return _read_png(path)
    head = raw[:16].decode("latin-1")
    raise ImageFormatError(f"{path}: unsupported image format (header {head!r})")


def write_image(img, path: PathLike) -> None:
    """Write a gray image as binary PGM (P5)."""
    arr = as_gray(img)
    h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(arr).tobytes())


def to_grayscale(img) -> np.ndarray:
    """ITU-R 601 luma, rounded half-up. Gray input is returned unchanged."""
    arr = np.asarray(img)
    if arr.ndim == 2:
        return as_gray(arr)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected an (h, w, 3) RGB image, got shape {arr.shape}")
    rgb = arr.astype(np.float64)
    y = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    return np.clip(round_half_up(y), 0, 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# Exposure fusion
# ---------------------------------------------------------------------------

def exposure_weight(v):
    """Gaussian well-exposedness weight of intensity ``v`` (0..255)."""
    x = np.asarray(v, dtype=np.float64) / 255.0
    return np.exp(-((x - EXPOSURE_MID) ** 2) / (2 * EXPOSURE_SIGMA**2))


def hdr_merge(frames: Sequence) -> np.ndarray:
    """Fuse pre-aligned exposure brackets into one gray image.

    Each pixel is the well-exposedness weighted mean of the frames; if all
    weights vanish the plain mean is used instead.
    """
    if len(frames) < 2:
        raise ValueError(f"hdr_merge needs at least 2 frames, got {len(frames)}")
    stack = [as_gray(f) for f in frames]
    shape = stack[0].shape
    for k, f in enumerate(stack[1:], start=1):
        if f.shape != shape:
            raise ValueError(f"frame {k} has shape {f.shape}, expected {shape}")
    # Sorting along the frame axis makes the float sums independent of frame order.
    values = np.sort(np.stack(stack).astype(np.float64), axis=0)
    weights = exposure_weight(values)
    wsum = weights.sum(axis=0)
    fused = (weights * values).sum(axis=0) / np.where(wsum < 1e-9, 1.0, wsum)
    fused = np.where(wsum < 1e-9, values.mean(axis=0), fused)
    return np.clip(round_half_up(fused), 0, 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# Cropping
# ---------------------------------------------------------------------------

def crop_window(img, x0: int, y0: int, width: int, height: int, fill: int = 0) -> np.ndarray:
    """Cut a ``width`` x ``height`` window at (x0, y0); origin may be negative.

    Pixels that fall outside the source take ``fill``.
    """
    arr = as_gray(img)
    h, w = arr.shape
    out = np.full((height, width), fill, dtype=np.uint8)
    sx0, sy0 = max(x0, 0), max(y0, 0)
    sx1, sy1 = min(x0 + width, w), min(y0 + height, h)
    if sx0 < sx1 and sy0 < sy1:
        out[sy0 - y0 : sy1 - y0, sx0 - x0 : sx1 - x0] = arr[sy0:sy1, sx0:sx1]
    return out


def crop_roi(img, roi: Roi, fill: int = 0) -> np.ndarray:
    if not 0 <= fill <= 255:
        raise ValueError(f"fill must be in [0, 255], got {fill}")
    return crop_window(img, roi.x0, roi.y0, roi.width, roi.height, fill)
