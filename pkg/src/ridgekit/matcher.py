"""Edge-table minutiae matcher with rotation-consistent greedy clustering.

Each template is summarised by an intra-template table of minutia pairs
(distance plus both minutiae's angles relative to the connecting segment).
These features do not change under rigid motion, so pairs that agree across
two templates become candidate links; every link implies a global rotation.
Links that agree on rotation and assign minutiae one-to-one are grown into a
cluster whose size is the score.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .minutiae import MinutiaTemplate

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class MatchConfig:
    d_max: float = 150.0
    tol_d: float = 8.0
    tol_a: float = math.radians(15.0)
    rot_tol: float = math.radians(15.0)
    threshold: float = 0.4
    max_seeds: int = 10  # seeds tried within the best-supported rotation window
    trans_tol: Optional[float] = 25.0  # px; None disables the global translation check


@dataclass(frozen=True)
class EdgeEntry:
    i: int
    j: int
    dist: float
    beta1: float
    beta2: float
    direction: float


@dataclass(frozen=True)
class MatchResult:
    score: int
    normalized: float
    decision: bool
    pairs: tuple = ()


def wrap_angle(a):
    """Wrap into (-pi, pi]."""
    out = np.mod(np.asarray(a, dtype=np.float64) + math.pi, TWO_PI) - math.pi
    out = np.where(out <= -math.pi, out + TWO_PI, out)
    return out if out.ndim else float(out)


def _edge_arrays(tpl: MinutiaTemplate, d_max: float) -> dict:
    """Column arrays of the edge table, sorted by (dist, i, j)."""
    n = len(tpl)
    i, j = np.triu_indices(n, 1)
    xy = np.array([(m.x, m.y) for m in tpl.minutiae], dtype=np.float64).reshape(-1, 2)
    ang = np.asarray(tpl.angles, dtype=np.float64)
    # screen geometry: y axis up, matching the minutia angles
    dx = xy[j, 0] - xy[i, 0]
    dy = -(xy[j, 1] - xy[i, 1])
    dist = np.hypot(dx, dy)
    keep = dist <= d_max
    i, j, dx, dy, dist = i[keep], j[keep], dx[keep], dy[keep], dist[keep]
    order = np.lexsort((j, i, dist))
    i, j, dx, dy, dist = i[order], j[order], dx[order], dy[order], dist[order]
    direction = np.arctan2(dy, dx)
    return {
        "i": i, "j": j, "dist": dist, "direction": direction,
        "beta1": np.atleast_1d(wrap_angle(ang[i] - direction)),
        "beta2": np.atleast_1d(wrap_angle(ang[j] - direction)),
    }


def build_edge_table(tpl: MinutiaTemplate, d_max: float = 150.0) -> list:
    """All minutia pairs within ``d_max``, sorted by distance then (i, j).

    Geometry uses screen orientation (y up), matching the minutia angles.
    """
    t = _edge_arrays(tpl, d_max)
    return [
        EdgeEntry(int(a), int(b), float(d), float(b1), float(b2), float(dr))
        for a, b, d, b1, b2, dr in zip(t["i"], t["j"], t["dist"], t["beta1"], t["beta2"], t["direction"])
    ]


def _circ_abs(x: np.ndarray) -> np.ndarray:
    """|x| after wrapping into [-pi, pi] (cheaper than wrap_angle for tolerance tests)."""
    return np.abs(x - TWO_PI * np.round(x / TWO_PI))


def _link_arrays(ta: dict, tb: dict, cfg: MatchConfig, chunk: int = 256) -> dict:
    """Compatible (edge a, edge b) pairs in both b orientations, as columns
    ``dev, ea, eb, flip, rot`` (unsorted)."""
    cols = {k: [] for k in ("dev", "ea", "eb", "flip", "rot")}
    na, nb = len(ta["dist"]), len(tb["dist"])
    if na and nb:
        # Tables are sorted by distance, so only a window of b can be compatible with each a.
        lo = np.searchsorted(tb["dist"], ta["dist"] - cfg.tol_d, side="left")
        hi = np.searchsorted(tb["dist"], ta["dist"] + cfg.tol_d, side="right")
        for start in range(0, na, chunk):
            sl = slice(start, min(na, start + chunk))
            counts = hi[sl] - lo[sl]
            total = int(counts.sum())
            if total == 0:
                continue
            ea_all = np.repeat(np.arange(sl.start, sl.stop), counts)
            # eb runs lo..hi-1 for every ea
            eb_all = np.repeat(lo[sl], counts) + np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
            for flipped in (False, True):
                # traversing b's edge from j to i swaps the betas and turns the segment by pi
                first, second = ("beta2", "beta1") if flipped else ("beta1", "beta2")
                shift = math.pi if flipped else 0.0
                e1 = _circ_abs(tb[first][eb_all] - shift - ta["beta1"][ea_all])
                keep = e1 <= cfg.tol_a
                ea, eb, e1 = ea_all[keep], eb_all[keep], e1[keep]
                e2 = _circ_abs(tb[second][eb] - shift - ta["beta2"][ea])
                keep = e2 <= cfg.tol_a
                ea, eb, e1, e2 = ea[keep], eb[keep], e1[keep], e2[keep]
                ddev = np.abs(tb["dist"][eb] - ta["dist"][ea]) / cfg.tol_d
                cols["dev"].append(ddev + (e1 + e2) / cfg.tol_a)
                cols["ea"].append(ea)
                cols["eb"].append(eb)
                cols["flip"].append(np.full(len(ea), flipped))
                cols["rot"].append(np.atleast_1d(wrap_angle(tb["direction"][eb] + shift - ta["direction"][ea])))
    if not cols["dev"]:
        return {k: np.zeros(0) for k in cols}
    return {k: np.concatenate(v) for k, v in cols.items()}


def _link_tuples(arr: dict, ta: dict, tb: dict) -> list:
    """Links as tuples ``(deviation, ea, eb, flipped, rotation, (ai, bi), (aj, bj))``
    ordered by deviation then (ea, eb, flipped)."""
    out = []
    for k in np.lexsort((arr["flip"], arr["eb"], arr["ea"], arr["dev"])):
        a_e, b_e, f = int(arr["ea"][k]), int(arr["eb"][k]), bool(arr["flip"][k])
        bi, bj = (tb["j"][b_e], tb["i"][b_e]) if f else (tb["i"][b_e], tb["j"][b_e])
        out.append((float(arr["dev"][k]), a_e, b_e, f, float(arr["rot"][k]),
                    (int(ta["i"][a_e]), int(bi)), (int(ta["j"][a_e]), int(bj))))
    return out


def _swap_links(arr: dict) -> dict:
    """The same compatible pairs seen from the other template: compatibility is
    symmetric and the implied rotation negates."""
    return {"dev": arr["dev"], "ea": arr["eb"], "eb": arr["ea"], "flip": arr["flip"],
            "rot": np.atleast_1d(wrap_angle(-arr["rot"]))}


def _links(ta: dict, tb: dict, cfg: MatchConfig) -> list:
    return _link_tuples(_link_arrays(ta, tb, cfg), ta, tb)


def _rotation_support(rots: np.ndarray, tol: float) -> np.ndarray:
    """Number of rotations within ``tol`` (circularly) of each entry, itself included."""
    ordered = np.sort(rots)
    ext = np.concatenate([ordered - TWO_PI, ordered, ordered + TWO_PI])
    lo = np.searchsorted(ext, rots - tol, side="left")
    hi = np.searchsorted(ext, rots + tol, side="right")
    return np.minimum(hi - lo, len(rots))


def _grow(seed: int, links, by_minutia: dict, placed=None) -> tuple:
    """Greedy growth from ``links[seed]``.

    Candidates are links sharing a minutia of ``a`` with the cluster; the
    lowest-deviation candidate (lowest index, as links are deviation-sorted)
    is taken next. A candidate that conflicts with the injective mapping is
    dropped for good, since the mapping only grows. Returns the minutia
    mapping and the set of link indices absorbed. ``placed(a, b)``, when
    given, must accept every new correspondence.
    """
    a_to_b: dict = {}
    b_to_a: dict = {}
    used = set()
    seen = {seed}
    heap = [seed]
    while heap:
        k = heapq.heappop(heap)
        link = links[k]
        if any(a_to_b.get(a, b) != b or b_to_a.get(b, a) != a for a, b in (link[5], link[6])):
            continue
        if placed is not None and not all(a in a_to_b or placed(a, b) for a, b in (link[5], link[6])):
            continue
        used.add(k)
        for a, b in (link[5], link[6]):
            if a in a_to_b:
                continue
            a_to_b[a] = b
            b_to_a[b] = a
            for nk in by_minutia.get(a, ()):
                if nk not in seen:
                    seen.add(nk)
                    heapq.heappush(heap, nk)
    return a_to_b, used


def _translation_check(link, pa: np.ndarray, pb: np.ndarray, tol: float):
    """Predicate: ``a -> b`` implies (under the link's rotation) a translation
    within ``tol`` of the one implied by the link's own endpoints."""
    c, s = math.cos(link[4]), math.sin(link[4])
    rot = np.array([[c, -s], [s, c]])
    t0 = np.mean([pb[b] - rot @ pa[a] for a, b in (link[5], link[6])], axis=0)

    def placed(a, b):
        d = pb[b] - rot @ pa[a] - t0
        return d[0] * d[0] + d[1] * d[1] <= tol * tol

    return placed


def _greedy_cluster(links, cfg: MatchConfig, pa=None, pb=None) -> dict:
    if not links:
        return {}
    rots = np.array([l[4] for l in links])
    support = _rotation_support(rots, cfg.rot_tol)
    # the best-supported rotation (ties keep the earliest, best-deviation link)
    best_rot = rots[int(np.argmax(support))]
    members = np.nonzero(np.abs(wrap_angle(rots - best_rot)) <= cfg.rot_tol)[0].tolist()
    # Several links in that window may seed (in deviation order); a wrong
    # correspondence that happens to agree on rotation would otherwise block
    # the true cluster. Links already absorbed or consistent with the best
    # cluster so far are not retried.
    by_minutia: dict = {}
    for k in members:
        for a, _ in (links[k][5], links[k][6]):
            by_minutia.setdefault(a, []).append(k)
    bound = min(len({a for k in members for a, _ in (links[k][5], links[k][6])}),
                len({b for k in members for _, b in (links[k][5], links[k][6])}))
    best: dict = {}
    covered: set = set()
    tried = 0
    for seed in members:
        if tried == cfg.max_seeds:
            break
        if seed in covered or all(best.get(a) == b for a, b in (links[seed][5], links[seed][6])):
            continue
        tried += 1
        placed = None
        if cfg.trans_tol is not None and pa is not None:
            placed = _translation_check(links[seed], pa, pb, cfg.trans_tol)
        mapping, used = _grow(seed, links, by_minutia, placed)
        covered |= used
        if len(mapping) > len(best):
            best = mapping
            if len(best) == bound:
                break
    return best


def _screen_points(tpl: MinutiaTemplate) -> np.ndarray:
    return np.array([(m.x, -m.y) for m in tpl.minutiae], dtype=np.float64).reshape(-1, 2)


def _order_key(tpl: MinutiaTemplate) -> tuple:
    return (tpl.width, tpl.height, tuple((m.x, m.y, m.angle, m.kind) for m in tpl.minutiae))


def match_templates(a: MinutiaTemplate, b: MinutiaTemplate,
                    cfg: Optional[MatchConfig] = None) -> MatchResult:
    """Score two templates; symmetric in its arguments."""
    cfg = cfg or MatchConfig()
    n = min(len(a), len(b))
    if n == 0:
        return MatchResult(0, 0.0, False)
    # A canonical argument order makes both calls run identical float arithmetic.
    swapped = _order_key(b) < _order_key(a)
    if swapped:
        a, b = b, a
    ta = _edge_arrays(a, cfg.d_max)
    tb = _edge_arrays(b, cfg.d_max)
    pa, pb = _screen_points(a), _screen_points(b)
    arr = _link_arrays(ta, tb, cfg)
    forward = _greedy_cluster(_link_tuples(arr, ta, tb), cfg, pa, pb)
    backward = _greedy_cluster(_link_tuples(_swap_links(arr), tb, ta), cfg, pb, pa)
    # evaluating both directions makes the score independent of argument order
    if len(backward) > len(forward):
        pairs = tuple(sorted((av, bk) for bk, av in backward.items()))
    else:
        pairs = tuple(sorted(forward.items()))
    if swapped:
        pairs = tuple(sorted((bk, av) for av, bk in pairs))
    score = len(pairs)
    normalized = min(1.0, score / n)
    return MatchResult(score, normalized, normalized >= cfg.threshold, pairs)
