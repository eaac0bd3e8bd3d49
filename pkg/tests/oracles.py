"""Independent reference implementations shared by the module tests and the
acceptance suite. Deliberately scalar and loop-based; none of them import the
code under test."""

import math

import numpy as np
from scipy import ndimage

EIGHT = np.ones((3, 3), int)


def scalar_kernel(size, freq, variance, theta, psi=0.0):
    """Direct evaluation of the cosine/sine formulas, before DC removal."""
    half = (size - 1) // 2
    cos_g = np.zeros((size, size))
    sin_g = np.zeros((size, size))
    for j in range(-half, half + 1):
        for i in range(-half, half + 1):
            g = math.exp(-(i * i + j * j) / (2 * variance))
            arg = 2 * math.pi * freq * (i * math.cos(theta) + j * math.sin(theta)) + psi
            cos_g[j + half, i + half] = g * math.cos(arg)
            sin_g[j + half, i + half] = g * math.sin(arg)
    return cos_g, sin_g


def naive_correlate(img, k):
    h, w = img.shape
    kh, kw = k.shape
    ah, aw = kh // 2, kw // 2
    out = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            s = 0.0
            for j in range(kh):
                for i in range(kw):
                    sy = min(max(y + j - ah, 0), h - 1)
                    sx = min(max(x + i - aw, 0), w - 1)
                    s += float(img[sy, sx]) * k[j, i]
            out[y, x] = s
    return out


def oracle_lut(counts, clip, n):
    """Scalar clip / redistribute / CDF, written independently of the library."""
    counts = [int(c) for c in counts]
    if clip != math.inf:
        ceiling = math.ceil(clip * n / 256)
        excess = 0
        for v in range(256):
            if counts[v] > ceiling:
                excess += counts[v] - ceiling
                counts[v] = ceiling
        for v in range(256):
            counts[v] += excess // 256
        for v in range(excess % 256):
            counts[v] += 1
    lut, run = [], 0
    for v in range(256):
        run += counts[v]
        lut.append(math.floor(255 * run / n + 0.5))
    return lut


def oracle_clahe_2x2(img, clip):
    """Four tiles, explicit per-pixel bilinear weights between tile centres."""
    h, w = img.shape
    th, tw = h // 2, w // 2
    luts = {}
    for r in range(2):
        for c in range(2):
            counts = [0] * 256
            for y in range(r * th, (r + 1) * th):
                for x in range(c * tw, (c + 1) * tw):
                    counts[img[y, x]] += 1
            luts[r, c] = oracle_lut(counts, clip, th * tw)
    cy = [(th - 1) / 2, th + (th - 1) / 2]
    cx = [(tw - 1) / 2, tw + (tw - 1) / 2]
    out = np.zeros_like(img)
    for y in range(h):
        fy = min(max((y - cy[0]) / (cy[1] - cy[0]), 0.0), 1.0)
        for x in range(w):
            fx = min(max((x - cx[0]) / (cx[1] - cx[0]), 0.0), 1.0)
            v = img[y, x]
            top = (1 - fx) * luts[0, 0][v] + fx * luts[0, 1][v]
            bot = (1 - fx) * luts[1, 0][v] + fx * luts[1, 1][v]
            out[y, x] = math.floor((1 - fy) * top + fy * bot + 0.5)
    return out


def low_contrast(seed=0, size=64):
    return np.random.default_rng(seed).integers(100, 141, (size, size), dtype=np.uint8)


def smoothing_pass(theta, mask, n=3):
    """Direct scalar evaluation of one doubled-angle smoothing pass."""
    rows, cols = theta.shape
    out = theta.copy()
    h = n // 2
    for a in range(rows):
        for b in range(cols):
            if not mask[a, b]:
                continue
            s = c = 0.0
            for m in range(max(0, a - h), min(rows, a + h + 1)):
                for k in range(max(0, b - h), min(cols, b + h + 1)):
                    if mask[m, k]:
                        s += math.sin(2 * theta[m, k])
                        c += math.cos(2 * theta[m, k])
            if abs(s) < 1e-12 and abs(c) < 1e-12:
                continue
            out[a, b] = (0.5 * math.atan2(s, c)) % math.pi
    return out


def has_square(skel):
    return bool((skel[:-1, :-1] & skel[1:, :-1] & skel[:-1, 1:] & skel[1:, 1:]).any())


def n_components(img):
    return ndimage.label(img, structure=EIGHT)[1]
