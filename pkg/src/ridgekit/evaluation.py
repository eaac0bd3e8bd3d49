"""FVC-protocol scoring, ROC/EER and the parameter sweeps / thread benchmark."""

from __future__ import annotations

import csv
import io
import logging
import re
import statistics
import time
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .gabor import convolve_parallel, make_bank

log = logging.getLogger(__name__)

THRESHOLDS = np.arange(101) / 100.0
IMAGE_SUFFIXES = (".pgm", ".ppm", ".png")
DEFAULT_SWEEP_SIZES = (15, 17, 19, 21, 23, 25, 29, 31, 35)
_NAME_RE = re.compile(r"^(\d+)_(\d+)$")
_DIMS_RE = re.compile(r"^(\d+)x(\d+)$")


class DeterminismError(RuntimeError):
    """Parallel convolution produced output differing from the 1-thread run."""


@dataclass
class ScoreSet:
    genuine: list = field(default_factory=list)
    impostor: list = field(default_factory=list)


@dataclass
class EvalReport:
    roc: list
    eer: float
    eer_threshold: float
    metadata: dict = field(default_factory=dict)

    def roc_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["threshold", "far", "frr"])
        for t, far, frr in self.roc:
            w.writerow([f"{t:.2f}", f"{far:.6f}", f"{frr:.6f}"])
        return buf.getvalue()


# ---------------------------------------------------------------------------
# FVC protocol
# ---------------------------------------------------------------------------

def scan_db(db_dir) -> dict:
    """Map finger id -> {impression id: path}; unparsable names are skipped."""
    root = Path(db_dir)
    if not root.is_dir():
        raise FileNotFoundError(f"database directory not found: {root}")
    fingers: dict = {}
    for p in sorted(root.iterdir()):
        if p.suffix.lower() not in IMAGE_SUFFIXES:
            continue
        m = _NAME_RE.match(p.stem)
        if not m:
            log.warning("skipping %s: name is not <finger>_<impression>", p.name)
            continue
        fingers.setdefault(int(m.group(1)), {})[int(m.group(2))] = p
    if not fingers:
        raise ValueError(f"no <finger>_<impression> images found in {root}")
    return fingers


def protocol_pairs(fingers: dict) -> tuple:
    """(genuine, impostor) lists of path pairs under the FVC rules."""
    if len(fingers) < 2:
        raise ValueError(f"FVC protocol needs >= 2 fingers, found {len(fingers)}")
    for fid, imps in fingers.items():
        if len(imps) < 2:
            raise ValueError(f"finger {fid} has {len(imps)} impression(s); need >= 2")
    genuine = []
    for fid in sorted(fingers):
        imps = fingers[fid]
        genuine.extend((imps[a], imps[b]) for a, b in combinations(sorted(imps), 2))
    firsts = [fingers[fid][min(fingers[fid])] for fid in sorted(fingers)]
    impostor = list(combinations(firsts, 2))
    return genuine, impostor


def limit_fingers(fingers: dict, max_fingers: Optional[int]) -> dict:
    if max_fingers is None:
        return fingers
    return {fid: fingers[fid] for fid in sorted(fingers)[:max_fingers]}


def fvc_protocol(db_dir, extract: Callable, match: Callable,
                 max_fingers: Optional[int] = None) -> ScoreSet:
    """Genuine and impostor scores for a directory in FVC naming.

    ``extract(path) -> template`` runs the configured pipeline (each image
    once); ``match(a, b) -> normalized score``.
    """
    fingers = limit_fingers(scan_db(db_dir), max_fingers)
    genuine, impostor = protocol_pairs(fingers)
    cache: dict = {}

    def tpl(path):
        if path not in cache:
            cache[path] = extract(path)
        return cache[path]

    scores = ScoreSet()
    for a, b in genuine:
        scores.genuine.append(float(match(tpl(a), tpl(b))))
    for a, b in impostor:
        scores.impostor.append(float(match(tpl(a), tpl(b))))
    return scores


# ---------------------------------------------------------------------------
# ROC / EER
# ---------------------------------------------------------------------------

def check_monotone(roc) -> None:
    far = [r[1] for r in roc]
    frr = [r[2] for r in roc]
    if any(b > a for a, b in zip(far, far[1:])):
        raise AssertionError("FAR is not non-increasing in threshold")
    if any(b < a for a, b in zip(frr, frr[1:])):
        raise AssertionError("FRR is not non-decreasing in threshold")


def compute_roc(scores: ScoreSet, thresholds=THRESHOLDS, metadata: Optional[dict] = None) -> EvalReport:
    """FAR(t) = P(impostor >= t), FRR(t) = P(genuine < t); EER where they cross.

    The crossing is linearly interpolated between the two bracketing thresholds.
    """
    if not scores.genuine or not scores.impostor:
        raise ValueError("compute_roc needs non-empty genuine and impostor score lists")
    gen = np.asarray(scores.genuine, dtype=np.float64)
    imp = np.asarray(scores.impostor, dtype=np.float64)
    ts = np.asarray(thresholds, dtype=np.float64)
    far = np.array([(imp >= t).sum() / imp.size for t in ts])
    frr = np.array([(gen < t).sum() / gen.size for t in ts])
    roc = [(float(t), float(a), float(r)) for t, a, r in zip(ts, far, frr)]
    check_monotone(roc)

    diff = far - frr
    hit = np.nonzero(diff <= 0)[0]
    if len(hit) == 0:
        # FAR stays above FRR on the whole grid
        eer, eer_t = float((far[-1] + frr[-1]) / 2), float(ts[-1])
    elif diff[hit[0]] == 0 or hit[0] == 0:
        k = hit[0]
        eer, eer_t = float((far[k] + frr[k]) / 2), float(ts[k])
    else:
        k = hit[0]
        alpha = diff[k - 1] / (diff[k - 1] - diff[k])
        eer = float(far[k - 1] + alpha * (far[k] - far[k - 1]))
        eer_t = float(ts[k - 1] + alpha * (ts[k] - ts[k - 1]))
    return EvalReport(roc, eer, eer_t, dict(metadata or {}))


def write_report(report: EvalReport, scores: ScoreSet, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "roc.csv").write_text(report.roc_csv(), encoding="utf-8")
    lines = [
        f"eer={report.eer:.6f}",
        f"eer_threshold={report.eer_threshold:.4f}",
        f"genuine_comparisons={len(scores.genuine)}",
        f"impostor_comparisons={len(scores.impostor)}",
        f"mean_genuine={np.mean(scores.genuine):.6f}",
        f"mean_impostor={np.mean(scores.impostor):.6f}",
    ]
    lines += [f"config.{k}={v}" for k, v in sorted(report.metadata.items())]
    (out / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

def parse_dims(text: str) -> tuple:
    m = _DIMS_RE.match(text.strip())
    if not m or int(m.group(1)) < 1 or int(m.group(2)) < 1:
        raise ValueError(f"malformed dimensions {text!r}; expected WxH, e.g. 800x700")
    return int(m.group(1)), int(m.group(2))


def rows_csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _mean_genuine(db_dir, extract, match, max_fingers) -> float:
    fingers = limit_fingers(scan_db(db_dir), max_fingers)
    genuine, _ = protocol_pairs(fingers)
    cache: dict = {}
    scores = []
    for a, b in genuine:
        for p in (a, b):
            if p not in cache:
                cache[p] = extract(p)
        scores.append(float(match(cache[a], cache[b])))
    return float(np.mean(scores))


def sweep_kernel(db_dir, sizes: Sequence[int] = DEFAULT_SWEEP_SIZES, *,
                 extract_for: Callable, match: Callable, max_fingers: Optional[int] = 10) -> list:
    """Mean genuine score per Gabor kernel size; rows sorted by size.

    ``extract_for(size)`` returns an extractor configured for that kernel size.
    """
    sizes = list(sizes)
    if not sizes:
        raise ValueError("kernel size list is empty")
    bad = [s for s in sizes if s % 2 == 0 or s < 3]
    if bad:
        raise ValueError(f"kernel sizes must be odd and >= 3, got {bad}")
    return [(s, _mean_genuine(db_dir, extract_for(s), match, max_fingers)) for s in sorted(set(sizes))]


def sweep_crop(db_dir, dims: Sequence, *, extract_for: Callable, match: Callable,
               max_fingers: Optional[int] = 10) -> list:
    """Mean genuine score per crop size (``"WxH"`` strings or tuples), sorted by area."""
    parsed = [parse_dims(d) if isinstance(d, str) else tuple(d) for d in dims]
    if not parsed:
        raise ValueError("crop dimension list is empty")
    parsed = sorted(set(parsed), key=lambda wh: (wh[0] * wh[1], wh))
    return [(f"{w}x{h}", _mean_genuine(db_dir, extract_for((w, h)), match, max_fingers)) for w, h in parsed]


# ---------------------------------------------------------------------------
# Thread benchmark
# ---------------------------------------------------------------------------

def bench_threads(img, thread_counts: Sequence[int] = tuple(range(1, 9)), *,
                  kernel_size: int = 21, freq: float = 0.1, variance: float = 16.0,
                  repeats: int = 3, bank=None) -> list:
    """Median wall time (ms) of the 16-kernel bank per thread count.

    Every run is compared bit-for-bit with the single-thread output first;
    a mismatch raises :class:`DeterminismError`.
    """
    counts = list(thread_counts)
    if not counts or min(counts) < 1:
        raise ValueError(f"thread counts must be >= 1, got {counts}")
    bank = bank or make_bank(kernel_size, freq, variance)
    reference = convolve_parallel(img, bank, 1)
    rows = []
    for n in counts:
        times = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            out = convolve_parallel(img, bank, n)
            times.append((time.perf_counter() - t0) * 1000.0)
            if not all(np.array_equal(a, b) for a, b in zip(out, reference)):
                raise DeterminismError(f"{n}-thread convolution differs from the 1-thread result")
        rows.append((n, statistics.median(times)))
    return rows
