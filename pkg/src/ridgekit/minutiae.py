"""Binarisation, thinning, crossing-number minutiae and the text template format.

Template file (UTF-8, LF)::

    FPTEMPLATE v1
    size <width> <height>
    M <x> <y> <angle_deg> <E|B>      # one line per minutia, sorted by y then x

Angles are measured from +x, counter-clockwise as seen on screen (y axis
points down), in [0, 360) degrees with four decimals.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy import ndimage

from .imagio import as_gray

PathLike = Union[str, os.PathLike]

ENDING = "ending"
BIFURCATION = "bifurcation"
_KIND_TOKEN = {ENDING: "E", BIFURCATION: "B"}
_TOKEN_KIND = {v: k for k, v in _KIND_TOKEN.items()}

HEADER = "FPTEMPLATE v1"
BINARIZE_OFFSET = 2.0
TRACE_LENGTH = 10

# (dr, dc) of the 8 neighbours in circular order starting north, clockwise on screen
NEIGHBOURS = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))


class TemplateFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Minutia:
    x: int
    y: int
    angle: float
    kind: str

    def __post_init__(self):
        if self.kind not in _KIND_TOKEN:
            raise ValueError(f"kind must be 'ending' or 'bifurcation', got {self.kind!r}")


@dataclass(frozen=True)
class MinutiaTemplate:
    width: int
    height: int
    minutiae: tuple = field(default_factory=tuple)

    def __len__(self):
        return len(self.minutiae)

    @property
    def xy(self) -> np.ndarray:
        return np.array([(m.x, m.y) for m in self.minutiae], dtype=np.float64).reshape(-1, 2)

    @property
    def angles(self) -> np.ndarray:
        return np.array([m.angle for m in self.minutiae], dtype=np.float64)


def sort_minutiae(items) -> tuple:
    return tuple(sorted(items, key=lambda m: (m.y, m.x, m.kind, m.angle)))


# ---------------------------------------------------------------------------
# Binarisation
# ---------------------------------------------------------------------------

def binarize_adaptive(img, window: int = 25) -> np.ndarray:
    """Ridge (True) where a pixel is darker than its local mean minus 2."""
    if window < 3 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 3, got {window}")
    f = as_gray(img).astype(np.float64)
    local_mean = ndimage.uniform_filter(f, size=window, mode="nearest")
    return f < local_mean - BINARIZE_OFFSET


# ---------------------------------------------------------------------------
# Thinning (Guo-Hall two-subcycle parallel scheme, table driven)
# ---------------------------------------------------------------------------

# Bit k of a neighbourhood code holds x_{k+1} in the Guo-Hall numbering:
# x1=E, x2=NE, x3=N, x4=NW, x5=W, x6=SW, x7=S, x8=SE.
_GH_OFFSETS = ((0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1))


def _build_guo_hall_tables():
    first = np.zeros(256, dtype=bool)
    second = np.zeros(256, dtype=bool)
    for code in range(256):
        x = [bool(code >> k & 1) for k in range(8)]
        x1, x2, x3, x4, x5, x6, x7, x8 = x
        c = (
            (not x1 and (x2 or x3))
            + (not x3 and (x4 or x5))
            + (not x5 and (x6 or x7))
            + (not x7 and (x8 or x1))
        )
        n1 = (x1 or x2) + (x3 or x4) + (x5 or x6) + (x7 or x8)
        n2 = (x2 or x3) + (x4 or x5) + (x6 or x7) + (x8 or x1)
        n = min(n1, n2)
        if c != 1 or not 2 <= n <= 3:
            continue
        first[code] = not ((x2 or x3 or not x8) and x1)
        second[code] = not ((x6 or x7 or not x4) and x5)
    return first, second


_GH_FIRST, _GH_SECOND = _build_guo_hall_tables()


def _neighbour_codes(skel: np.ndarray) -> np.ndarray:
    p = np.pad(skel, 1).astype(np.uint8)
    h, w = skel.shape
    code = np.zeros((h, w), dtype=np.uint8)
    for k, (dr, dc) in enumerate(_GH_OFFSETS):
        code |= p[1 + dr : 1 + dr + h, 1 + dc : 1 + dc + w] << k
    return code


def _yokoi_c8(nb: Sequence[int]) -> int:
    """8-connectivity number from neighbours in Guo-Hall order (x1..x8)."""
    xb = [1 - v for v in nb] + [1 - nb[0]]
    return sum(xb[k] - xb[k] * xb[k + 1] * xb[(k + 2) % 8] for k in (0, 2, 4, 6))


def _remove_squares(skel: np.ndarray) -> bool:
    """Sequentially delete simple pixels that belong to a 2x2 ridge square."""
    sq = skel[:-1, :-1] & skel[1:, :-1] & skel[:-1, 1:] & skel[1:, 1:]
    if not sq.any():
        return False
    changed = False
    h, w = skel.shape
    for r, c in zip(*np.nonzero(sq)):
        for rr, cc in ((r, c), (r, c + 1), (r + 1, c), (r + 1, c + 1)):
            if not skel[rr, cc]:
                continue
            nb = [
                int(skel[rr + dr, cc + dc]) if 0 <= rr + dr < h and 0 <= cc + dc < w else 0
                for dr, dc in _GH_OFFSETS
            ]
            if sum(nb) >= 2 and _yokoi_c8(nb) == 1:
                skel[rr, cc] = False
                changed = True
                break
    return changed


def thin(binary) -> np.ndarray:
    """Reduce ridges to 8-connected, one-pixel-wide skeletons.

    Alternates the two parallel subcycles until nothing changes, then removes
    any 2x2 squares left behind; repeats until stable, so ``thin`` is
    idempotent.
    """
    skel = np.asarray(binary, dtype=bool).copy()
    while True:
        changed = False
        for table in (_GH_FIRST, _GH_SECOND):
            delete = skel & table[_neighbour_codes(skel)]
            if delete.any():
                skel[delete] = False
                changed = True
        if not changed:
            changed = _remove_squares(skel)
            if not changed:
                return skel


# ---------------------------------------------------------------------------
# Crossing number extraction
# ---------------------------------------------------------------------------

def crossing_numbers(skel) -> np.ndarray:
    """CN = 1/2 sum |P_i - P_{i+1}| over the circular 8-neighbourhood; 0 off-ridge."""
    s = np.pad(np.asarray(skel, dtype=bool), 1).astype(np.int16)
    h, w = s.shape[0] - 2, s.shape[1] - 2
    ring = [s[1 + dr : 1 + dr + h, 1 + dc : 1 + dc + w] for dr, dc in NEIGHBOURS]
    total = sum(np.abs(ring[k] - ring[(k + 1) % 8]) for k in range(8))
    cn = total // 2
    return np.where(s[1:-1, 1:-1] > 0, cn, 0)


def _trace(skel: np.ndarray, start: tuple, first: tuple, steps: int) -> tuple:
    """Follow the skeleton from ``start`` through ``first``; return the last pixel reached."""
    h, w = skel.shape
    cur = first
    visited = {start, first}
    for _ in range(steps - 1):
        nxt = [
            (cur[0] + dr, cur[1] + dc)
            for dr, dc in NEIGHBOURS
            if 0 <= cur[0] + dr < h and 0 <= cur[1] + dc < w
            and skel[cur[0] + dr, cur[1] + dc] and (cur[0] + dr, cur[1] + dc) not in visited
        ]
        if len(nxt) != 1:
            # stop at branch points; take the 4-neighbour if a diagonal duplicate exists
            four = [p for p in nxt if abs(p[0] - cur[0]) + abs(p[1] - cur[1]) == 1]
            if len(nxt) == 2 and len(four) == 1:
                nxt = four
            else:
                break
        cur = nxt[0]
        visited.add(cur)
    return cur


def _screen_angle(dr: float, dc: float) -> float:
    return math.atan2(-dr, dc) % (2 * math.pi)


def _branch_directions(skel: np.ndarray, r: int, c: int) -> list:
    h, w = skel.shape
    starts = [
        (r + dr, c + dc)
        for dr, dc in NEIGHBOURS
        if 0 <= r + dr < h and 0 <= c + dc < w and skel[r + dr, c + dc]
    ]
    # neighbours adjacent to each other belong to the same branch; keep 4-neighbours first
    starts.sort(key=lambda p: abs(p[0] - r) + abs(p[1] - c))
    branches = []
    for p in starts:
        if any(max(abs(p[0] - q[0]), abs(p[1] - q[1])) <= 1 for q in branches):
            continue
        branches.append(p)
    dirs = []
    for p in branches:
        end = _trace(skel, (r, c), p, TRACE_LENGTH)
        dirs.append(_screen_angle(end[0] - r, end[1] - c))
    return dirs


def _lift(theta_img: float, direction: float) -> float:
    """Pick the one of the two screen angles of ridge orientation ``theta_img``
    (image coordinates, mod pi) that is closest to ``direction``."""
    base = (-theta_img) % math.pi
    cands = (base, base + math.pi)
    return min(cands, key=lambda a: abs(math.remainder(a - direction, 2 * math.pi))) % (2 * math.pi)


def _circ_diff(a: float, b: float) -> float:
    return abs(math.remainder(a - b, 2 * math.pi))


def _minutia_angle(kind: str, dirs: list, theta_img: float) -> float:
    if not dirs:
        return (-theta_img) % math.pi
    if kind == ENDING:
        return _lift(theta_img, dirs[0])
    if len(dirs) >= 3:
        best = None
        for a in range(len(dirs)):
            for b in range(a + 1, len(dirs)):
                d = _circ_diff(dirs[a], dirs[b])
                if best is None or d < best[0]:
                    best = (d, a, b)
        _, a, b = best
        bisector = math.atan2(math.sin(dirs[a]) + math.sin(dirs[b]), math.cos(dirs[a]) + math.cos(dirs[b]))
        return _lift(theta_img, bisector + math.pi)
    return _lift(theta_img, dirs[0])


def extract_minutiae(skel, field) -> MinutiaTemplate:
    """Crossing-number minutiae (CN 1 = ending, CN 3 = bifurcation).

    Angles follow the block orientation of ``field`` (``theta_smooth``),
    oriented along the departing ridge for endings and opposite to the fork
    bisector for bifurcations.
    """
    skel = np.asarray(skel, dtype=bool)
    h, w = skel.shape
    cn = crossing_numbers(skel)
    r = field.block_size
    found = []
    for y, x in zip(*np.nonzero((cn == 1) | (cn == 3))):
        kind = ENDING if cn[y, x] == 1 else BIFURCATION
        br = min(y // r, field.rows - 1)
        bc = min(x // r, field.cols - 1)
        theta = float(field.theta_smooth[br, bc])
        angle = _minutia_angle(kind, _branch_directions(skel, y, x), theta)
        found.append(Minutia(int(x), int(y), quantize_angle(angle), kind))
    return MinutiaTemplate(w, h, sort_minutiae(found))


# ---------------------------------------------------------------------------
# Filtering
# ---------------------------------------------------------------------------

def filter_minutiae(tpl: MinutiaTemplate, mask=None, block_size: int = 16,
                    border_px: float = 10, merge_px: float = 5,
                    center: Optional[tuple] = None) -> MinutiaTemplate:
    """Drop minutiae near the image edge or background and merge close pairs.

    A minutia closer than ``border_px`` to the image edge or to a background
    block is removed. Pairs closer than ``merge_px`` are merged repeatedly,
    keeping the one nearer ``center`` (image centre by default); pairs are
    visited in (y, x) order.
    """
    w, h = tpl.width, tpl.height
    keep = []
    dist_bg = None
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        pix = np.kron(mask, np.ones((block_size, block_size), dtype=bool))[:h, :w]
        if pix.shape != (h, w):
            raise ValueError(f"mask covers {pix.shape[1]}x{pix.shape[0]} px, template is {w}x{h}")
        dist_bg = ndimage.distance_transform_edt(pix) if not pix.all() else None
    for m in tpl.minutiae:
        if min(m.x, m.y, w - 1 - m.x, h - 1 - m.y) < border_px:
            continue
        if dist_bg is not None and dist_bg[m.y, m.x] < border_px:
            continue
        keep.append(m)

    cx, cy = center if center is not None else ((w - 1) / 2.0, (h - 1) / 2.0)
    items = list(sort_minutiae(keep))
    while True:
        pair = None
        for a in range(len(items)):
            for b in range(a + 1, len(items)):
                if math.hypot(items[a].x - items[b].x, items[a].y - items[b].y) < merge_px:
                    pair = (a, b)
                    break
            if pair:
                break
        if pair is None:
            break
        a, b = pair
        da = math.hypot(items[a].x - cx, items[a].y - cy)
        db = math.hypot(items[b].x - cx, items[b].y - cy)
        del items[b if db >= da else a]
    return MinutiaTemplate(w, h, tuple(items))


# ---------------------------------------------------------------------------
# Template file format
# ---------------------------------------------------------------------------

def quantize_angle(angle: float) -> float:
    """Snap an angle (rad) to the 4-decimal degree grid used on disk."""
    return math.radians(float(_format_deg(angle)))


def _format_deg(angle: float) -> str:
    deg = round(math.degrees(angle % (2 * math.pi)), 4)
    if deg >= 360.0:
        deg -= 360.0
    return f"{deg:.4f}"


def format_template(tpl: MinutiaTemplate) -> str:
    lines = [HEADER, f"size {tpl.width} {tpl.height}"]
    for m in sort_minutiae(tpl.minutiae):
        lines.append(f"M {m.x} {m.y} {_format_deg(m.angle)} {_KIND_TOKEN[m.kind]}")
    return "\n".join(lines) + "\n"


def write_template(tpl: MinutiaTemplate, path: PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_template(tpl))


def parse_template(text: str, source: str = "<string>") -> MinutiaTemplate:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0].rstrip("\r") != HEADER:
        raise TemplateFormatError(f"{source}:1: expected '{HEADER}'")
    if len(lines) < 2:
        raise TemplateFormatError(f"{source}:2: missing 'size' line")
    parts = lines[1].split()
    try:
        if len(parts) != 3 or parts[0] != "size":
            raise ValueError
        width, height = int(parts[1]), int(parts[2])
        if width < 1 or height < 1:
            raise ValueError
    except ValueError:
        raise TemplateFormatError(f"{source}:2: malformed size line {lines[1]!r}") from None
    found = []
    for lineno, line in enumerate(lines[2:], start=3):
        parts = line.split()
        try:
            if len(parts) != 5 or parts[0] != "M":
                raise ValueError("expected 'M <x> <y> <angle> <E|B>'")
            if parts[4] not in _TOKEN_KIND:
                raise ValueError(f"bad kind token {parts[4]!r}")
            x, y = int(parts[1]), int(parts[2])
            deg = float(parts[3])
            if not (0 <= x < width and 0 <= y < height):
                raise ValueError(f"coordinates ({x}, {y}) outside {width}x{height}")
            if not 0.0 <= deg < 360.0:
                raise ValueError(f"angle {deg} outside [0, 360)")
        except ValueError as exc:
            raise TemplateFormatError(f"{source}:{lineno}: {exc}") from None
        found.append(Minutia(x, y, math.radians(deg), _TOKEN_KIND[parts[4]]))
    return MinutiaTemplate(width, height, sort_minutiae(found))


def read_template(path: PathLike) -> MinutiaTemplate:
    with open(path, encoding="utf-8") as fh:
        return parse_template(fh.read(), str(path))
