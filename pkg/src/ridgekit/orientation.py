"""Block-wise ridge orientation, doubled-angle smoothing and foreground segmentation.

Angles are in image coordinates (x right, y down) and identified modulo pi;
``theta`` is the ridge direction, perpendicular to the intensity gradient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage

from .imagio import as_gray


@dataclass(frozen=True)
class OrientationField:
    block_size: int
    theta_raw: np.ndarray
    theta_smooth: np.ndarray
    coherence: np.ndarray
    mask: np.ndarray

    @property
    def rows(self) -> int:
        return self.theta_raw.shape[0]

    @property
    def cols(self) -> int:
        return self.theta_raw.shape[1]

    def block_center(self, col: int, row: int) -> tuple:
        r = self.block_size
        return col * r + r // 2, row * r + r // 2


def wrap_pi(theta):
    """Map angles into [0, pi)."""
    out = np.mod(theta, math.pi)
    return np.where(out >= math.pi, 0.0, out)


def _block_sums(values: np.ndarray, r: int) -> np.ndarray:
    h, w = values.shape
    rows, cols = math.ceil(h / r), math.ceil(w / r)
    padded = np.zeros((rows * r, cols * r), dtype=np.float64)
    padded[:h, :w] = values
    return padded.reshape(rows, r, cols, r).sum(axis=(1, 3))


def gradients(img) -> tuple:
    """3x3 Sobel derivatives (gx along x, gy along y) with replicated borders."""
    f = as_gray(img).astype(np.float64)
    gx = ndimage.sobel(f, axis=1, mode="nearest")
    gy = ndimage.sobel(f, axis=0, mode="nearest")
    return gx, gy


def estimate_orientation(img, block_size: int = 16) -> OrientationField:
    """Least-squares block orientation and coherence from Sobel gradients.

    The returned field has every block marked foreground and
    ``theta_smooth`` equal to ``theta_raw``.
    """
    arr = as_gray(img)
    r = block_size
    if r < 4:
        raise ValueError(f"block size must be >= 4, got {r}")
    if arr.shape[0] < r or arr.shape[1] < r:
        raise ValueError(f"image {arr.shape[1]}x{arr.shape[0]} is smaller than one {r}x{r} block")
    gx, gy = gradients(arr)
    sxy = _block_sums(2.0 * gx * gy, r)
    sdiff = _block_sums(gx * gx - gy * gy, r)
    senergy = _block_sums(gx * gx + gy * gy, r)
    theta = wrap_pi(0.5 * np.arctan2(sxy, sdiff) + math.pi / 2)
    mag = np.hypot(sdiff, sxy)
    coherence = np.where(senergy < 1e-9, 0.0, mag / np.where(senergy < 1e-9, 1.0, senergy))
    coherence = np.clip(coherence, 0.0, 1.0)
    mask = np.ones(theta.shape, dtype=bool)
    return OrientationField(r, theta, theta.copy(), coherence, mask)


def segment_foreground(img, block_size: int = 16, std_threshold: float = 10.0) -> np.ndarray:
    """Per-block foreground flags: intensity std >= threshold, then one majority-vote pass."""
    arr = as_gray(img).astype(np.float64)
    r = block_size
    h, w = arr.shape
    rows, cols = math.ceil(h / r), math.ceil(w / r)
    std = np.empty((rows, cols))
    for br in range(rows):
        for bc in range(cols):
            std[br, bc] = arr[br * r : (br + 1) * r, bc * r : (bc + 1) * r].std()
    raw = std >= std_threshold

    padded = np.pad(raw, 1, constant_values=False)
    present = np.pad(np.ones_like(raw), 1, constant_values=False)
    fg_neighbours = np.zeros(raw.shape, dtype=int)
    n_neighbours = np.zeros(raw.shape, dtype=int)
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr == 0 and dc == 0:
                continue
            sl = (slice(1 + dr, 1 + dr + rows), slice(1 + dc, 1 + dc + cols))
            fg_neighbours += padded[sl]
            n_neighbours += present[sl]
    disagree = np.where(raw, n_neighbours - fg_neighbours, fg_neighbours)
    return np.where(disagree >= 5, ~raw, raw)


def with_mask(field: OrientationField, mask) -> OrientationField:
    """Attach a foreground mask; background blocks get coherence 0."""
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != field.theta_raw.shape:
        raise ValueError(f"mask shape {mask.shape} does not match field {field.theta_raw.shape}")
    return replace(field, mask=mask, coherence=np.where(mask, field.coherence, 0.0))


def smooth_pass(theta: np.ndarray, mask: np.ndarray, neighborhood: int = 3) -> np.ndarray:
    """One doubled-angle averaging pass over the clipped n x n neighbourhood.

    Only foreground blocks contribute and only foreground blocks are updated.
    """
    half = neighborhood // 2
    s2 = np.where(mask, np.sin(2 * theta), 0.0)
    c2 = np.where(mask, np.cos(2 * theta), 0.0)
    rows, cols = theta.shape
    ps = np.pad(s2, half)
    pc = np.pad(c2, half)
    ssum = np.zeros_like(theta)
    csum = np.zeros_like(theta)
    for dr in range(neighborhood):
        for dc in range(neighborhood):
            ssum += ps[dr : dr + rows, dc : dc + cols]
            csum += pc[dr : dr + rows, dc : dc + cols]
    degenerate = (np.abs(ssum) < 1e-12) & (np.abs(csum) < 1e-12)
    new = wrap_pi(0.5 * np.arctan2(ssum, csum))
    return np.where(mask & ~degenerate, new, theta)


def _angle_change(a, b) -> float:
    d = np.abs(wrap_pi(a - b))
    return float(np.max(np.minimum(d, math.pi - d))) if d.size else 0.0


def smooth_orientation(field: OrientationField, passes: int = 2, neighborhood: int = 3,
                       tol: float = 0.01) -> OrientationField:
    """Repeated doubled-angle smoothing of ``theta_raw`` into ``theta_smooth``.

    Stops early once the largest per-block change of a pass is below ``tol`` rad.
    """
    if neighborhood < 1 or neighborhood % 2 == 0:
        raise ValueError(f"neighborhood must be odd, got {neighborhood}")
    theta = field.theta_raw.copy()
    for _ in range(passes):
        new = smooth_pass(theta, field.mask, neighborhood)
        change = _angle_change(new, theta)
        theta = new
        if change < tol:
            break
    return replace(field, theta_smooth=theta)


def orientation_field(img, block_size: int = 16, std_threshold: float = 10.0,
                      passes: int = 2, neighborhood: int = 3) -> OrientationField:
    """Estimate, segment and smooth in one call."""
    field = estimate_orientation(img, block_size)
    field = with_mask(field, segment_foreground(img, block_size, std_threshold))
    return smooth_orientation(field, passes, neighborhood)
