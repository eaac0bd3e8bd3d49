"""Contrast-limited adaptive histogram equalization (CLAHE)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .imagio import as_gray, round_half_up

BINS = 256


@dataclass(frozen=True)
class ClaheConfig:
    grid_cols: int = 8
    grid_rows: int = 8
    clip_limit: float = 2.0

    def __post_init__(self):
        if self.grid_cols < 1 or self.grid_rows < 1:
            raise ValueError(f"CLAHE grid must be >= 1x1, got {self.grid_cols}x{self.grid_rows}")
        if not self.clip_limit >= 1.0:
            raise ValueError(f"clip_limit must be >= 1.0, got {self.clip_limit}")


def histogram(img) -> np.ndarray:
    """256-bin intensity histogram (int64 counts)."""
    return np.bincount(as_gray(img).ravel(), minlength=BINS).astype(np.int64)


def equalize_tile(hist, clip_limit: float, tile_pixels: int) -> np.ndarray:
    """Lookup table for one tile from its histogram.

    Bins are clipped at ``ceil(clip_limit * tile_pixels / 256)``, the excess is
    spread uniformly over all bins (remainder one count per bin starting at
    bin 0), and the table is the scaled CDF of the clipped histogram.
    """
    if tile_pixels < 1:
        raise ValueError("tile_pixels must be >= 1")
    hist = np.asarray(hist, dtype=np.int64)
    if math.isinf(clip_limit):
        clipped = hist.copy()
    else:
        ceiling = math.ceil(clip_limit * tile_pixels / BINS)
        excess = int(np.maximum(hist - ceiling, 0).sum())
        clipped = np.minimum(hist, ceiling)
        share, rest = divmod(excess, BINS)
        clipped += share
        clipped[:rest] += 1
    cdf = np.cumsum(clipped)
    lut = round_half_up(255.0 * cdf / tile_pixels)
    return np.clip(lut, 0, 255).astype(np.uint8)


def _tile_edges(n: int, tiles: int) -> np.ndarray:
    """Tile boundaries along one axis: ceil-sized tiles, last one may be short."""
    step = math.ceil(n / tiles)
    count = math.ceil(n / step)
    return np.minimum(np.arange(count + 1) * step, n)


def _blend_weights(n: int, edges: np.ndarray):
    """For each coordinate: lower tile index, upper tile index and upper weight.

    Coordinates outside the outermost tile centres clamp to them.
    """
    centres = (edges[:-1] + edges[1:] - 1) / 2.0
    coords = np.arange(n, dtype=np.float64)
    upper = np.searchsorted(centres, coords, side="right")
    upper = np.clip(upper, 1, max(len(centres) - 1, 1))
    lower = upper - 1
    if len(centres) == 1:
        return np.zeros(n, int), np.zeros(n, int), np.zeros(n)
    span = centres[upper] - centres[lower]
    frac = np.clip((coords - centres[lower]) / span, 0.0, 1.0)
    return lower, upper, frac


def clahe(img, cfg: ClaheConfig | None = None) -> np.ndarray:
    """Apply CLAHE with bilinear blending of the per-tile lookup tables."""
    cfg = cfg or ClaheConfig()
    arr = as_gray(img)
    h, w = arr.shape
    if w < cfg.grid_cols or h < cfg.grid_rows:
        raise ValueError(
            f"image {w}x{h} is smaller than the {cfg.grid_cols}x{cfg.grid_rows} CLAHE grid; "
            "use a smaller --clahe-grid"
        )
    xe = _tile_edges(w, cfg.grid_cols)
    ye = _tile_edges(h, cfg.grid_rows)
    luts = np.empty((len(ye) - 1, len(xe) - 1, BINS), dtype=np.float64)
    for r in range(len(ye) - 1):
        for c in range(len(xe) - 1):
            tile = arr[ye[r] : ye[r + 1], xe[c] : xe[c + 1]]
            luts[r, c] = equalize_tile(histogram(tile), cfg.clip_limit, tile.size)

    x_lo, x_hi, fx = _blend_weights(w, xe)
    y_lo, y_hi, fy = _blend_weights(h, ye)
    fx = fx[None, :]
    fy = fy[:, None]
    v = arr.astype(np.intp)

    def look(rows, cols):
        return luts[rows[:, None], cols[None, :], v]

    top = (1 - fx) * look(y_lo, x_lo) + fx * look(y_lo, x_hi)
    bottom = (1 - fx) * look(y_hi, x_lo) + fx * look(y_hi, x_hi)
    out = (1 - fy) * top + fy * bottom
    return np.clip(round_half_up(out), 0, 255).astype(np.uint8)
