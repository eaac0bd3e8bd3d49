"""Synthetic images, orientation fields and templates for tests and experiments.

The finger generator grows ridges from noise by repeatedly applying
orientation-steered Gabor filters (the usual SFinGe-style recipe) over an
orientation field built from planted cores and deltas.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
from scipy import ndimage

from .imagio import write_image
from .minutiae import ENDING, BIFURCATION, Minutia, MinutiaTemplate, quantize_angle, sort_minutiae
from .orientation import OrientationField


def stripes(width: int, height: int, period: float = 8.0, angle: float = 0.0,
            lo: int = 40, hi: int = 215) -> np.ndarray:
    """Sinusoidal stripes whose ridges run along ``angle`` (image coordinates).

    ``angle=pi/2`` gives vertical stripes.
    """
    y, x = np.mgrid[0:height, 0:width].astype(np.float64)
    nx, ny = -math.sin(angle), math.cos(angle)
    phase = 2 * math.pi * (x * nx + y * ny) / period
    v = lo + (hi - lo) * (0.5 + 0.5 * np.cos(phase))
    return np.clip(np.round(v), 0, 255).astype(np.uint8)


def whorl(width: int, height: int, cx: float, cy: float, period: float = 9.0,
          lo: int = 40, hi: int = 215) -> np.ndarray:
    """Concentric rings centred on (cx, cy)."""
    y, x = np.mgrid[0:height, 0:width].astype(np.float64)
    rad = np.hypot(x - cx, y - cy)
    v = lo + (hi - lo) * (0.5 + 0.5 * np.cos(2 * math.pi * rad / period))
    return np.clip(np.round(v), 0, 255).astype(np.uint8)


def singular_field(cols: int, rows: int, block_size: int = 16,
                   cores: Iterable = (), deltas: Iterable = (),
                   base: float = 0.0, coherence: Optional[np.ndarray] = None) -> OrientationField:
    """Orientation field with planted singularities at pixel positions.

    theta = base + 1/2 sum arg(p - core) - 1/2 sum arg(p - delta), sampled at
    block centres (image coordinates).
    """
    r = block_size
    bc, br = np.meshgrid(np.arange(cols), np.arange(rows))
    px = bc * r + r // 2
    py = br * r + r // 2
    theta = np.full((rows, cols), base, dtype=np.float64)
    for cx, cy in cores:
        theta += 0.5 * np.arctan2(py - cy, px - cx)
    for dx, dy in deltas:
        theta -= 0.5 * np.arctan2(py - dy, px - dx)
    theta = np.mod(theta, math.pi)
    coh = np.ones((rows, cols)) if coherence is None else np.asarray(coherence, dtype=np.float64)
    return OrientationField(r, theta, theta.copy(), coh, np.ones((rows, cols), dtype=bool))


def uniform_field(cols: int, rows: int, theta: float = 0.0, block_size: int = 16) -> OrientationField:
    t = np.full((rows, cols), theta % math.pi)
    return OrientationField(block_size, t, t.copy(), np.ones((rows, cols)), np.ones((rows, cols), dtype=bool))


def draw_line(img: np.ndarray, x0: int, y0: int, x1: int, y1: int, value=True) -> None:
    """Bresenham line, in place."""
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    while True:
        img[y0, x0] = value
        if x0 == x1 and y0 == y1:
            return
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def y_glyph(size: int = 48, arm: int = 14) -> np.ndarray:
    """One-pixel 'Y': stem going down from the junction, arms going up-left/up-right."""
    img = np.zeros((size, size), dtype=bool)
    cx, cy = size // 2, size // 2
    draw_line(img, cx, cy, cx, cy + arm)
    draw_line(img, cx, cy, cx - arm, cy - arm)
    draw_line(img, cx, cy, cx + arm, cy - arm)
    return img


def ring_glyph(size: int = 48, radius: int = 15) -> np.ndarray:
    """Closed 8-connected one-pixel circle (midpoint algorithm)."""
    img = np.zeros((size, size), dtype=bool)
    c = size // 2
    x, y, err = radius, 0, 1 - radius
    while x >= y:
        for px, py in ((x, y), (y, x), (-y, x), (-x, y), (-x, -y), (-y, -x), (y, -x), (x, -y)):
            img[c + py, c + px] = True
        y += 1
        if err < 0:
            err += 2 * y + 1
        else:
            x -= 1
            err += 2 * (y - x) + 1
    return img


def random_blobs(rng: np.random.Generator, size: int = 64, count: int = 6) -> np.ndarray:
    """Union of random filled ellipses."""
    y, x = np.mgrid[0:size, 0:size].astype(np.float64)
    img = np.zeros((size, size), dtype=bool)
    for _ in range(count):
        cx, cy = rng.uniform(4, size - 4, 2)
        ax, ay = rng.uniform(2, size / 4, 2)
        t = rng.uniform(0, math.pi)
        u = (x - cx) * math.cos(t) + (y - cy) * math.sin(t)
        v = -(x - cx) * math.sin(t) + (y - cy) * math.cos(t)
        img |= (u / ax) ** 2 + (v / ay) ** 2 <= 1.0
    return img


# ---------------------------------------------------------------------------
# Templates
# ---------------------------------------------------------------------------

def random_template(rng: np.random.Generator, n: int, width: int = 400, height: int = 400,
                    min_sep: float = 12.0, margin: int = 20,
                    max_gap: Optional[float] = 150.0) -> MinutiaTemplate:
    """``n`` minutiae uniformly placed with a minimum separation.

    With ``max_gap`` set, each new minutia lies within ``max_gap`` of an
    earlier one, so the pair graph used by the matcher is connected (a
    minutia with no neighbour within the matcher's ``d_max`` carries no pair
    features and can never be matched). ``None`` gives plain uniform placement.
    """
    pts = []
    tries = 0
    while len(pts) < n:
        tries += 1
        if tries > 100000:
            raise RuntimeError("could not place minutiae; lower min_sep")
        x = int(rng.integers(margin, width - margin))
        y = int(rng.integers(margin, height - margin))
        dists = [math.hypot(x - p[0], y - p[1]) for p in pts]
        if dists and min(dists) < min_sep:
            continue
        if dists and max_gap is not None and min(dists) > max_gap:
            continue
        pts.append((x, y))
    items = [
        Minutia(x, y, quantize_angle(rng.uniform(0, 2 * math.pi)),
                ENDING if rng.random() < 0.5 else BIFURCATION)
        for x, y in pts
    ]
    return MinutiaTemplate(width, height, sort_minutiae(items))


def transform_template(tpl: MinutiaTemplate, dx: float, dy: float, rotation: float,
                       center: Optional[tuple] = None) -> MinutiaTemplate:
    """Rotate (screen-counter-clockwise) about ``center`` then translate; coordinates
    are rounded and minutiae leaving the frame are dropped."""
    cx, cy = center if center is not None else (tpl.width / 2.0, tpl.height / 2.0)
    c, s = math.cos(rotation), math.sin(rotation)
    out = []
    for m in tpl.minutiae:
        u, v = m.x - cx, -(m.y - cy)
        ru, rv = c * u - s * v, s * u + c * v
        x = int(math.floor(cx + ru + dx + 0.5))
        y = int(math.floor(cy - rv + dy + 0.5))
        if 0 <= x < tpl.width and 0 <= y < tpl.height:
            out.append(Minutia(x, y, quantize_angle(m.angle + rotation), m.kind))
    return MinutiaTemplate(tpl.width, tpl.height, sort_minutiae(out))


# ---------------------------------------------------------------------------
# Synthetic fingers
# ---------------------------------------------------------------------------

def _oriented_kernels(period: float, n: int = 16, size: int = 13, sigma: float = 3.5):
    half = size // 2
    y, x = np.mgrid[-half : half + 1, -half : half + 1].astype(np.float64)
    env = np.exp(-(x * x + y * y) / (2 * sigma**2))
    kernels = []
    for m in range(n):
        t = m * math.pi / n
        # waves travel across the ridge direction t
        k = env * np.cos(2 * math.pi * (-x * math.sin(t) + y * math.cos(t)) / period)
        kernels.append(k - k.mean())
    return kernels


def master_finger(rng: np.random.Generator, width: int = 320, height: int = 360,
                  period: float = 9.0, iterations: int = 12) -> np.ndarray:
    """A synthetic master print: dark ridges on white inside an elliptical pad."""
    y, x = np.mgrid[0:height, 0:width].astype(np.float64)
    cx = width / 2 + rng.uniform(-20, 20)
    cy = height * 0.42 + rng.uniform(-20, 20)
    kind = rng.integers(0, 3)
    theta = np.full((height, width), rng.uniform(-0.2, 0.2))
    theta += 0.5 * np.arctan2(y - cy, x - cx)
    if kind == 0:
        # loop: core plus a delta below to one side
        ddx, ddy = cx + rng.choice([-1, 1]) * rng.uniform(60, 100), cy + rng.uniform(90, 130)
        theta -= 0.5 * np.arctan2(y - ddy, x - ddx)
    elif kind == 1:
        # whorl-like: two close cores, two deltas
        c2x, c2y = cx + rng.uniform(-10, 10), cy + rng.uniform(15, 30)
        theta += 0.5 * np.arctan2(y - c2y, x - c2x)
        for sgn in (-1, 1):
            theta -= 0.5 * np.arctan2(y - (cy + 120), x - (cx + sgn * 110))
    else:
        # arch-like loop with a far delta
        theta -= 0.5 * np.arctan2(y - (cy + 160), x - cx)
    theta = np.mod(theta, math.pi)

    kernels = _oriented_kernels(period)
    idx = np.round(theta / (math.pi / len(kernels))).astype(int) % len(kernels)
    field = rng.standard_normal((height, width))
    for _ in range(iterations):
        out = np.zeros_like(field)
        for m, k in enumerate(kernels):
            sel = idx == m
            if sel.any():
                out[sel] = ndimage.correlate(field, k, mode="reflect")[sel]
        field = np.tanh(3.0 * out / (np.std(out) + 1e-9))
    pad = ((x - width / 2) / (width * 0.44)) ** 2 + ((y - height / 2) / (height * 0.46)) ** 2 <= 1.0
    img = np.where(pad, 128 + 100 * field, 255.0)
    return np.clip(np.round(img), 0, 255).astype(np.uint8)


def impression(master: np.ndarray, rng: np.random.Generator, max_shift: float = 15.0,
               max_rot_deg: float = 8.0, noise: float = 12.0) -> np.ndarray:
    """A rigidly perturbed, noisy impression of ``master`` (same canvas size)."""
    h, w = master.shape
    rot = math.radians(rng.uniform(-max_rot_deg, max_rot_deg))
    tx, ty = rng.uniform(-max_shift, max_shift, 2)
    y, x = np.mgrid[0:h, 0:w].astype(np.float64)
    cx, cy = w / 2.0, h / 2.0
    c, s = math.cos(rot), math.sin(rot)
    sx = c * (x - cx - tx) + s * (y - cy - ty) + cx
    sy = -s * (x - cx - tx) + c * (y - cy - ty) + cy
    warped = ndimage.map_coordinates(master.astype(np.float64), [sy, sx], order=1, cval=255.0)
    gain = rng.uniform(0.8, 1.1)
    warped = 255 - gain * (255 - warped) + rng.normal(0, noise, warped.shape)
    return np.clip(np.round(warped), 0, 255).astype(np.uint8)


def make_synthetic_db(out_dir, fingers: int = 4, impressions: int = 3, seed: int = 0,
                      width: int = 320, height: int = 360) -> list:
    """Write ``<finger>_<impression>.pgm`` files in FVC naming; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    paths = []
    for f in range(1, fingers + 1):
        master = master_finger(rng, width, height)
        for k in range(1, impressions + 1):
            p = out / f"{f}_{k}.pgm"
            write_image(impression(master, rng), p)
            paths.append(p)
    return paths
