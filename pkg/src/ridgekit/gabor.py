"""Gabor kernel bank, border-replicating 2-D correlation and response fusion.

Kernel grids are stored as ``kernel[row, col]`` with ``col`` running along
image x (offset ``i``) and ``row`` along image y (offset ``j``), both centred
on the anchor pixel.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .imagio import as_gray, round_half_up

N_ORIENTATIONS = 16


@dataclass(frozen=True)
class GaborParams:
    size: int = 21
    theta: float = 0.0
    freq: float = 0.1
    variance: float = 16.0
    psi: float = 0.0
    gamma: float = 1.0
    norm_b: float = 1.0
    norm_c: float = 1.0

    def __post_init__(self):
        if self.size < 3 or self.size % 2 == 0:
            raise ValueError(f"kernel size must be odd and >= 3, got {self.size}")
        if self.freq <= 0:
            raise ValueError(f"freq must be > 0, got {self.freq}")
        if self.variance <= 0:
            raise ValueError(f"variance must be > 0, got {self.variance}")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")


@dataclass(frozen=True)
class GaborKernel:
    params: GaborParams
    cosine: np.ndarray
    sine: np.ndarray


@dataclass(frozen=True)
class KernelBank:
    kernels: tuple

    def __len__(self):
        return len(self.kernels)

    def __iter__(self):
        return iter(self.kernels)

    @property
    def cosines(self) -> list:
        return [k.cosine for k in self.kernels]


def make_kernel(params: GaborParams) -> GaborKernel:
    half = (params.size - 1) // 2
    j, i = np.mgrid[-half : half + 1, -half : half + 1].astype(np.float64)
    ct, st = math.cos(params.theta), math.sin(params.theta)
    along = i * ct + j * st
    across = -i * st + j * ct
    if params.gamma == 1.0:
        radius2 = i * i + j * j
    else:
        radius2 = along**2 + params.gamma**2 * across**2
    envelope = np.exp(-radius2 / (2.0 * params.variance))
    phase = 2.0 * math.pi * params.freq * along + params.psi
    cosine = params.norm_b * envelope * np.cos(phase)
    sine = params.norm_c * envelope * np.sin(phase)
    # DC removal so flat regions give zero response
    cosine = cosine - cosine.mean()
    cosine.setflags(write=False)
    sine.setflags(write=False)
    return GaborKernel(params, cosine, sine)


def make_bank(size: int = 21, freq: float = 0.1, variance: float = 16.0, **extra) -> KernelBank:
    base = GaborParams(size=size, freq=freq, variance=variance, **extra)
    thetas = [m * math.pi / N_ORIENTATIONS for m in range(N_ORIENTATIONS)]
    return KernelBank(tuple(make_kernel(replace(base, theta=t)) for t in thetas))


# ---------------------------------------------------------------------------
# Convolution engine
# ---------------------------------------------------------------------------

def _pad(img, half_r: int, half_c: int) -> np.ndarray:
    return np.pad(np.asarray(img, dtype=np.float64), ((half_r, half_r), (half_c, half_c)), mode="edge")


def _correlate_rows(padded: np.ndarray, kernel: np.ndarray, out: np.ndarray, r0: int, r1: int) -> None:
    """Fill ``out[r0:r1]``. Every output pixel accumulates the kernel taps in the
    same fixed (row, col) order, so any row split gives bit-identical results."""
    kh, kw = kernel.shape
    width = out.shape[1]
    acc = out[r0:r1]
    acc[...] = 0.0
    tmp = np.empty_like(acc)
    for a in range(kh):
        rows = padded[r0 + a : r1 + a]
        for b in range(kw):
            np.multiply(rows[:, b : b + width], kernel[a, b], out=tmp)
            np.add(acc, tmp, out=acc)


def _check_kernel(img: np.ndarray, kernel: np.ndarray) -> None:
    if kernel.ndim != 2 or kernel.shape[0] % 2 == 0 or kernel.shape[1] % 2 == 0:
        raise ValueError(f"kernel must be 2-D with odd sides, got shape {kernel.shape}")
    if max(kernel.shape) > min(img.shape):
        raise ValueError(
            f"kernel {kernel.shape[1]}x{kernel.shape[0]} is larger than image {img.shape[1]}x{img.shape[0]}"
        )


def convolve(img, kernel) -> np.ndarray:
    """``H(x, y) = sum_ij I(x + i - a, y + j - a) K(i, j)`` with replicated borders.

    Returns a float64 image of the input's shape (not clamped).
    """
    arr = np.asarray(img)
    kernel = np.asarray(kernel, dtype=np.float64)
    _check_kernel(arr, kernel)
    padded = _pad(arr, kernel.shape[0] // 2, kernel.shape[1] // 2)
    out = np.empty(arr.shape, dtype=np.float64)
    _correlate_rows(padded, kernel, out, 0, arr.shape[0])
    return out


def _row_bands(height: int, n: int) -> list:
    n = max(1, min(n, height))
    edges = np.linspace(0, height, n + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def convolve_parallel(img, kernels, threads: int = 1) -> list:
    """Correlate ``img`` with each kernel using a pool of ``threads`` workers.

    ``kernels`` is a :class:`KernelBank` (cosine grids are used) or a sequence
    of 2-D arrays. Work items are (kernel, row band) pairs; each output pixel is
    produced by exactly one worker, so results are bit-identical to
    :func:`convolve` for any thread count.
    """
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    grids = kernels.cosines if isinstance(kernels, KernelBank) else [np.asarray(k, dtype=np.float64) for k in kernels]
    arr = np.asarray(img)
    for k in grids:
        _check_kernel(arr, k)
    outputs = [np.empty(arr.shape, dtype=np.float64) for _ in grids]
    padded = {}
    for k in grids:
        key = k.shape
        if key not in padded:
            padded[key] = _pad(arr, k.shape[0] // 2, k.shape[1] // 2)

    if threads == 1:
        for k, out in zip(grids, outputs):
            _correlate_rows(padded[k.shape], k, out, 0, arr.shape[0])
        return outputs

    # Split rows finely enough that a pool larger than the bank still has work.
    bands = _row_bands(arr.shape[0], max(1, math.ceil(threads / max(len(grids), 1)) * 2))
    jobs = [(k, out, r0, r1) for k, out in zip(grids, outputs) for r0, r1 in bands]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(_correlate_rows, padded[k.shape], k, out, r0, r1) for k, out, r0, r1 in jobs]
        for f in futures:
            f.result()
    return outputs


def rescale_to_gray(values) -> np.ndarray:
    """Affine map min->0, max->255; a constant image maps to 128."""
    values = np.asarray(values, dtype=np.float64)
    lo, hi = values.min(), values.max()
    if hi - lo <= 0:
        return np.full(values.shape, 128, dtype=np.uint8)
    return np.clip(round_half_up(255.0 * (values - lo) / (hi - lo)), 0, 255).astype(np.uint8)


def fuse_responses(responses: Sequence) -> np.ndarray:
    """Per-pixel maximum over orientation responses, rescaled to 0..255."""
    if len(responses) == 0:
        raise ValueError("fuse_responses needs at least one response image")
    shape = np.shape(responses[0])
    for k, r in enumerate(responses):
        if np.shape(r) != shape:
            raise ValueError(f"response {k} has shape {np.shape(r)}, expected {shape}")
    fused = np.max(np.stack([np.asarray(r, dtype=np.float64) for r in responses]), axis=0)
    return rescale_to_gray(fused)


def gabor_enhance(img, bank: KernelBank, threads: int = 1):
    """Run the bank over ``img``; returns ``(fused_gray, responses)``."""
    responses = convolve_parallel(as_gray(img), bank, threads)
    return fuse_responses(responses), responses
