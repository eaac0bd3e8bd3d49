"""Mirror alignment, core-centred cropping and ridge-period normalisation."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import ndimage, signal

from .imagio import as_gray, crop_window, round_half_up
from .orientation import gradients

log = logging.getLogger(__name__)

MIN_PERIOD = 3.0
MAX_PERIOD = 50.0


@dataclass(frozen=True)
class AlignConfig:
    crop_width: int = 800
    crop_height: int = 700
    mirror: bool = False
    mirror_axis: str = "horizontal"
    fill: int = 255
    target_ridge_period: float = 10.0

    def __post_init__(self):
        if self.crop_width < 1 or self.crop_height < 1:
            raise ValueError(f"crop dims must be >= 1, got {self.crop_width}x{self.crop_height}")
        if self.mirror_axis not in ("horizontal", "vertical"):
            raise ValueError(f"mirror_axis must be horizontal or vertical, got {self.mirror_axis!r}")
        if not 0 <= self.fill <= 255:
            raise ValueError(f"fill must be in [0, 255], got {self.fill}")


def mirror_horizontal(img) -> np.ndarray:
    return np.ascontiguousarray(as_gray(img)[:, ::-1])


def mirror_vertical(img) -> np.ndarray:
    return np.ascontiguousarray(as_gray(img)[::-1, :])


def apply_mirror(img, cfg: AlignConfig) -> np.ndarray:
    if not cfg.mirror:
        return as_gray(img)
    return mirror_horizontal(img) if cfg.mirror_axis == "horizontal" else mirror_vertical(img)


def crop_about_core(img, core, cfg: AlignConfig) -> np.ndarray:
    """Crop ``crop_width x crop_height`` so that the core lands on pixel (w//2, h//2)."""
    w, h = cfg.crop_width, cfg.crop_height
    return crop_window(img, core.x - w // 2, core.y - h // 2, w, h, cfg.fill)


# ---------------------------------------------------------------------------
# Ridge-period normalisation
# ---------------------------------------------------------------------------

def estimate_ridge_period(img, window: int = 96) -> Optional[float]:
    """Mean peak spacing of the ridge signature in a central window.

    The window is projected onto the direction normal to its dominant ridge
    orientation (intensities averaged along the ridges) and the spacing of the
    signature's maxima is measured. Returns ``None`` if fewer than two peaks
    are found.
    """
    arr = as_gray(img).astype(np.float64)
    h, w = arr.shape
    win = min(window, h, w)
    y0, x0 = (h - win) // 2, (w - win) // 2
    patch = arr[y0 : y0 + win, x0 : x0 + win]
    gx, gy = gradients(patch.astype(np.uint8))
    # gradient direction is the ridge normal
    normal = 0.5 * math.atan2(float((2 * gx * gy).sum()), float((gx * gx - gy * gy).sum()))
    nx, ny = math.cos(normal), math.sin(normal)
    tx, ty = -ny, nx

    c = (win - 1) / 2.0
    half_len = win // 2 - 1
    s = np.arange(-half_len, half_len + 1, dtype=np.float64)
    t = np.arange(-half_len // 2, half_len // 2 + 1, dtype=np.float64)
    ss, tt = np.meshgrid(s, t, indexing="ij")
    xs = c + ss * nx + tt * tx
    ys = c + ss * ny + tt * ty
    sampled = ndimage.map_coordinates(patch, [ys, xs], order=1, mode="nearest")
    profile = ndimage.gaussian_filter1d(sampled.mean(axis=1), 1.0)
    peaks, _ = signal.find_peaks(profile, prominence=max(1e-6, 0.1 * np.ptp(profile)))
    if len(peaks) < 2:
        return None
    return float(np.mean(np.diff(peaks)))


def resize_bilinear(img, factor: float) -> np.ndarray:
    """Resample by ``factor`` with bilinear interpolation (pixel-centre aligned)."""
    arr = as_gray(img).astype(np.float64)
    h, w = arr.shape
    nh = max(1, int(round_half_up(h * factor)))
    nw = max(1, int(round_half_up(w * factor)))
    ys = (np.arange(nh) + 0.5) * (h / nh) - 0.5
    xs = (np.arange(nw) + 0.5) * (w / nw) - 0.5
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    out = ndimage.map_coordinates(arr, [yy, xx], order=1, mode="nearest")
    return np.clip(round_half_up(out), 0, 255).astype(np.uint8)


def prescale_to_ridge_period(img, estimated_period: Optional[float], target_period: float = 10.0) -> np.ndarray:
    """Rescale so that ridges repeat every ``target_period`` pixels.

    Implausible estimates (outside 3..50 px, or ``None``) leave the image
    untouched and log a warning.
    """
    arr = as_gray(img)
    if estimated_period is None or not (MIN_PERIOD <= estimated_period <= MAX_PERIOD):
        log.warning("ridge period estimate %s outside [%g, %g] px; skipping prescale",
                    estimated_period, MIN_PERIOD, MAX_PERIOD)
        return arr
    if estimated_period == target_period:
        return arr.copy()
    return resize_bilinear(arr, target_period / estimated_period)
