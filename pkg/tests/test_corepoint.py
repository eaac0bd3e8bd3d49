import math

import numpy as np
import pytest

from ridgekit.corepoint import detect_core, index_map, poincare_index
from ridgekit.orientation import orientation_field
from ridgekit.synth import singular_field, stripes, uniform_field, whorl

R = 16


def centre(col, row):
    return col * R + R // 2, row * R + R // 2


def oracle_index(theta_fn, col, row):
    """Walk the 8 surrounding block centres counter-clockwise on screen, then negate
    (equivalent to the clockwise-on-screen path), summing minimal mod-pi steps."""
    ring = [(1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1)]
    vals = [theta_fn(*centre(col + dc, row + dr)) for dc, dr in ring]
    total = 0.0
    for k in range(8):
        d = vals[(k + 1) % 8] - vals[k]
        while d > math.pi / 2:
            d -= math.pi
        while d <= -math.pi / 2:
            d += math.pi
        total += d
    return -total / (2 * math.pi)


def test_uniform_field_zero_index():
    f = uniform_field(6, 5, 0.7)
    for row in range(1, 4):
        for col in range(1, 5):
            assert poincare_index(f, col, row) == 0.0


def test_border_and_background_undefined():
    f = uniform_field(5, 5, 0.2)
    assert poincare_index(f, 0, 2) is None
    assert poincare_index(f, 4, 4) is None
    f.mask[1, 1] = False
    assert poincare_index(f, 2, 2) is None


def enclosing_blocks(x, y):
    """Blocks whose 8-block ring strictly encloses pixel (x, y)."""
    out = set()
    for row in range(int(y) // R - 2, int(y) // R + 3):
        for col in range(int(x) // R - 2, int(x) // R + 3):
            cx, cy = centre(col, row)
            if abs(x - cx) < R and abs(y - cy) < R:
                out.add((col, row))
    return out


@pytest.mark.parametrize("sign, expected", [(1, 0.5), (-1, -0.5)])
def test_planted_at_block_centre(sign, expected):
    x0, y0 = centre(4, 4)
    kw = {"cores": [(x0, y0)]} if sign > 0 else {"deltas": [(x0, y0)]}
    f = singular_field(9, 9, R, **kw)
    assert poincare_index(f, 4, 4) == expected


@pytest.mark.parametrize("sign, expected", [(1, 0.5), (-1, -0.5)])
@pytest.mark.parametrize("offset", [(3, 5), (-6, 2), (7, -7)])
def test_planted_generic_matches_path_oracle(sign, expected, offset):
    cols, rows = 9, 9
    x0, y0 = centre(4, 4)
    x0, y0 = x0 + offset[0], y0 + offset[1]
    kw = {"cores": [(x0, y0)]} if sign > 0 else {"deltas": [(x0, y0)]}
    f = singular_field(cols, rows, R, **kw)
    assert poincare_index(f, x0 // R, y0 // R) == expected

    def theta_fn(x, y):
        return (sign * 0.5 * math.atan2(y - y0, x - x0)) % math.pi

    for row in range(1, rows - 1):
        for col in range(1, cols - 1):
            raw = oracle_index(theta_fn, col, row)
            want = expected if (col, row) in enclosing_blocks(x0, y0) else 0.0
            assert raw == pytest.approx(want, abs=1e-9)
            assert poincare_index(f, col, row) == want


def test_index_sum_equals_planted_total():
    # generic positions: every singularity sits strictly inside four 8-block rings
    cores = [(61, 53), (170, 75)]
    deltas = [(103, 150)]
    f = singular_field(14, 13, R, cores=cores, deltas=deltas, base=0.3)
    idx = index_map(f)
    total = 0.5 + 0.5 - 0.5
    assert np.nansum(idx) == pytest.approx(4 * total)
    # rings centred on every other block tile the plane, counting each singularity once
    for r0 in (1, 2):
        for c0 in (1, 2):
            assert np.nansum(idx[r0::2, c0::2]) == pytest.approx(total)


def test_whorl_field_index_one():
    x0, y0 = centre(4, 4)
    f = singular_field(9, 9, R, cores=[(x0, y0), (x0, y0)], base=math.pi / 2)
    assert poincare_index(f, 4, 4) == 1.0


def test_synthetic_whorl_image():
    cx, cy = 133, 121
    img = whorl(256, 256, cx, cy)
    core = detect_core(orientation_field(img, R))
    assert core is not None and not core.is_fallback
    assert abs(core.x // R - cx // R) <= 2 and abs(core.y // R - cy // R) <= 2


def test_uniform_stripes_fallback():
    f = orientation_field(stripes(128, 96, 9, 0.8), R)
    core = detect_core(f)
    assert core.is_fallback and core.confidence == 0.0 and core.index_value == 0.0
    assert (core.block_col, core.block_row) == (4, 3)  # centroid of an all-foreground 8x6 grid (3.5, 2.5) rounds up
    assert (core.x, core.y) == centre(4, 3)


def test_empty_foreground_returns_none():
    f = uniform_field(5, 5)
    f.mask[:] = False
    assert detect_core(f) is None


def test_high_coherence_core_wins():
    cols, rows = 16, 10
    a, b = (3 * R + 11, 4 * R + 12), (12 * R + 11, 5 * R + 12)
    coh = np.full((rows, cols), 0.2)
    coh[4:8, 11:15] = 0.9
    f = singular_field(cols, rows, R, cores=[a, b], coherence=coh)
    core = detect_core(f)
    assert (core.block_col, core.block_row) in enclosing_blocks(*b)
    assert core.confidence == pytest.approx(0.9)
    # uniform coherence: the tie goes to the upper-left candidate
    g = singular_field(cols, rows, R, cores=[a, b])
    won = detect_core(g)
    assert (won.block_col, won.block_row) == min(enclosing_blocks(*a), key=lambda cr: (cr[1], cr[0]))


def test_translation_equivariance():
    cx, cy = 120 + 8, 104 + 8
    c1 = detect_core(orientation_field(whorl(256, 240, cx, cy), R))
    c2 = detect_core(orientation_field(whorl(256, 240, cx + R, cy), R))
    assert (c2.block_col - c1.block_col, c2.block_row - c1.block_row) == (1, 0)
    assert c2.x - c1.x == R


def test_detection_deterministic():
    img = whorl(200, 200, 97, 105)
    f = orientation_field(img, R)
    assert detect_core(f) == detect_core(f)
