"""Core-point localisation by Poincare index on the smoothed orientation field."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .orientation import OrientationField

# Closed 8-block path around (col, row) in the sense of increasing atan2(dy, dx)
# with y pointing down: E, SE, S, SW, W, NW, N, NE.
RING = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))


@dataclass(frozen=True)
class CorePoint:
    x: int
    y: int
    block_col: int
    block_row: int
    index_value: float
    confidence: float

    @property
    def is_fallback(self) -> bool:
        return self.index_value == 0


def _wrap_half_pi(d: float) -> float:
    """Wrap an orientation difference into (-pi/2, pi/2]."""
    d = math.fmod(d, math.pi)
    if d > math.pi / 2:
        d -= math.pi
    elif d <= -math.pi / 2:
        d += math.pi
    return d


def poincare_index(field: OrientationField, col: int, row: int) -> Optional[float]:
    """Index in turns (+0.5 core, -0.5 delta, +1 whorl, 0 regular).

    Returns ``None`` when the 3x3 neighbourhood leaves the grid or touches a
    background block.
    """
    if not (1 <= col < field.cols - 1 and 1 <= row < field.rows - 1):
        return None
    if not field.mask[row - 1 : row + 2, col - 1 : col + 2].all():
        return None
    theta = field.theta_smooth
    angles = [theta[row + dr, col + dc] for dc, dr in RING]
    total = 0.0
    for k in range(len(angles)):
        total += _wrap_half_pi(angles[(k + 1) % len(angles)] - angles[k])
    turns = total / (2 * math.pi)
    nearest = round(turns * 2) / 2
    return nearest if abs(turns - nearest) <= 0.1 else 0.0


def index_map(field: OrientationField) -> np.ndarray:
    """Poincare index for every block; NaN where undefined."""
    out = np.full((field.rows, field.cols), np.nan)
    for row in range(field.rows):
        for col in range(field.cols):
            v = poincare_index(field, col, row)
            if v is not None:
                out[row, col] = v
    return out


def _confidence(field: OrientationField, col: int, row: int) -> float:
    return float(field.coherence[row - 1 : row + 2, col - 1 : col + 2].mean())


def detect_core(field: OrientationField) -> Optional[CorePoint]:
    """Pick the most coherent core-type singularity.

    Falls back to the centroid of the foreground mask (index 0, confidence 0)
    when no singularity is found; returns ``None`` for an empty foreground.
    """
    if not field.mask.any():
        return None
    best = None
    for row in range(field.rows):
        for col in range(field.cols):
            idx = poincare_index(field, col, row)
            if idx not in (0.5, 1.0):
                continue
            conf = _confidence(field, col, row)
            # strict '>' keeps the first (upper-left) block on ties
            if best is None or conf > best[0]:
                best = (conf, col, row, idx)
    if best is not None:
        conf, col, row, idx = best
        x, y = field.block_center(col, row)
        return CorePoint(x, y, col, row, idx, conf)
    rows, cols = np.nonzero(field.mask)
    row = int(math.floor(rows.mean() + 0.5))
    col = int(math.floor(cols.mean() + 0.5))
    x, y = field.block_center(col, row)
    return CorePoint(x, y, col, row, 0.0, 0.0)
