"""End-to-end per-image pipeline and its configuration."""

from __future__ import annotations

import configparser
import logging
import math
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import align, corepoint, enhance, gabor, imagio, minutiae, orientation
from .minutiae import MinutiaTemplate

log = logging.getLogger(__name__)


class StageError(RuntimeError):
    """A pipeline stage failed; the message is prefixed with the stage name."""

    def __init__(self, stage: str, exc: BaseException):
        super().__init__(f"[{stage}] {exc}")
        self.stage = stage
        self.cause = exc


@dataclass(frozen=True)
class PipelineConfig:
    sensor: str = "optical"
    kernel_size: int = 21
    threads: int = 1
    freq: float = 0.1
    variance: float = 16.0
    clahe_cols: int = 8
    clahe_rows: int = 8
    clip_limit: float = 2.0
    block_size: int = 16
    std_threshold: float = 10.0
    smooth_passes: int = 2
    crop_width: int = 800
    crop_height: int = 700
    mirror: str = "auto"
    fill: int = 255
    prescale: str = "auto"
    target_ridge_period: float = 10.0
    binarize_window: int = 25
    border_px: float = 10.0
    merge_px: float = 5.0
    debug_dir: Optional[str] = None

    def __post_init__(self):
        if self.sensor not in ("camera", "optical"):
            raise ValueError(f"sensor must be camera or optical, got {self.sensor!r}")
        for name in ("mirror", "prescale"):
            if getattr(self, name) not in ("on", "off", "auto"):
                raise ValueError(f"{name} must be on, off or auto, got {getattr(self, name)!r}")
        if self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads}")
        # validates kernel size, freq and variance
        gabor.GaborParams(size=self.kernel_size, freq=self.freq, variance=self.variance)
        enhance.ClaheConfig(self.clahe_cols, self.clahe_rows, self.clip_limit)
        self.align_config()

    @property
    def mirror_enabled(self) -> bool:
        return self.mirror == "on" or (self.mirror == "auto" and self.sensor == "camera")

    @property
    def prescale_enabled(self) -> bool:
        return self.prescale == "on" or (self.prescale == "auto" and self.sensor == "camera")

    @property
    def hdr_enabled(self) -> bool:
        return self.sensor == "camera"

    def align_config(self) -> align.AlignConfig:
        return align.AlignConfig(self.crop_width, self.crop_height, self.mirror_enabled,
                                 fill=self.fill, target_ridge_period=self.target_ridge_period)

    def snapshot(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != "debug_dir"}


_ALIASES = {"crop": ("crop_width", "crop_height"), "clahe_grid": ("clahe_cols", "clahe_rows")}


def _parse_pair(text: str) -> tuple:
    a, sep, b = text.strip().partition("x")
    if not sep:
        raise ValueError(f"expected <a>x<b>, got {text!r}")
    return int(a), int(b)


def config_from_mapping(values: dict, base: Optional[PipelineConfig] = None) -> PipelineConfig:
    """Overlay string or typed values onto ``base`` (defaults if omitted)."""
    base = base or PipelineConfig()
    types = {f.name: f.type for f in fields(PipelineConfig)}
    updates = {}
    for key, raw in values.items():
        key = key.replace("-", "_")
        if key in _ALIASES:
            a, b = _parse_pair(raw) if isinstance(raw, str) else raw
            updates.update(dict(zip(_ALIASES[key], (a, b))))
            continue
        if key not in types:
            raise ValueError(f"unknown config key {key!r}")
        current = getattr(base, key)
        if isinstance(raw, str) and not isinstance(current, str) and key != "debug_dir":
            if isinstance(current, bool):
                raw = raw.lower() in ("1", "true", "yes", "on")
            elif isinstance(current, int):
                raw = int(raw)
            else:
                raw = float(raw)
        updates[key] = raw
    return replace(base, **updates)


def load_config_file(path) -> dict:
    """Read ``key = value`` lines (``#`` comments) into a dict of strings.

    TOML-style quoted strings (``sensor = "camera"``) are unquoted.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    parser.read_string("[ridgekit]\n" + Path(path).read_text(encoding="utf-8"))
    out = {}
    for key, value in parser["ridgekit"].items():
        if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
            value = value[1:-1]
        out[key] = value
    return out


# ---------------------------------------------------------------------------
# Running
# ---------------------------------------------------------------------------

class _Debug:
    def __init__(self, directory):
        self.dir = Path(directory) if directory else None
        self.n = 0
        if self.dir:
            self.dir.mkdir(parents=True, exist_ok=True)

    def dump(self, name: str, img) -> None:
        if self.dir is None:
            return
        self.n += 1
        imagio.write_image(img, self.dir / f"{self.n:02d}_{name}.pgm")


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except Exception as exc:  # noqa: BLE001 - re-raised with the stage tag
        raise StageError(name, exc) from exc


def orientation_overlay(img, field: orientation.OrientationField) -> np.ndarray:
    """Gray image with one short line per foreground block along its ridge direction."""
    from .synth import draw_line

    out = (np.asarray(img, dtype=np.float64) * 0.5 + 127).astype(np.uint8)
    canvas = np.zeros(out.shape, dtype=bool)
    r = field.block_size
    h, w = out.shape
    for row in range(field.rows):
        for col in range(field.cols):
            if not field.mask[row, col]:
                continue
            cx, cy = field.block_center(col, row)
            t = field.theta_smooth[row, col]
            dx, dy = (r / 2 - 1) * math.cos(t), (r / 2 - 1) * math.sin(t)
            x0, y0 = int(round(cx - dx)), int(round(cy - dy))
            x1, y1 = int(round(cx + dx)), int(round(cy + dy))
            if all(0 <= v < w for v in (x0, x1)) and all(0 <= v < h for v in (y0, y1)):
                draw_line(canvas, x0, y0, x1, y1)
    out[canvas] = 0
    return out


def crosshair(img, x: int, y: int, arm: int = 12) -> np.ndarray:
    out = np.array(img, dtype=np.uint8, copy=True)
    h, w = out.shape
    out[max(0, y - 1) : y + 2, max(0, x - arm) : x + arm + 1] = 0
    out[max(0, y - arm) : y + arm + 1, max(0, x - 1) : x + 2] = 0
    return out


def load_gray_frames(paths: Sequence, cfg: PipelineConfig) -> np.ndarray:
    frames = [imagio.to_grayscale(imagio.load_image(p)) for p in paths]
    if len(frames) == 1:
        return frames[0]
    if not cfg.hdr_enabled:
        raise ValueError("multiple input frames need HDR merging, which requires --sensor camera")
    if len(frames) > 9:
        raise ValueError(f"at most 9 exposure frames are supported, got {len(frames)}")
    return imagio.hdr_merge(frames)


def enhance_image(gray, cfg: PipelineConfig, debug: Optional[_Debug] = None) -> np.ndarray:
    """CLAHE followed by the fused Gabor bank response."""
    debug = debug or _Debug(None)
    clahe_img = _stage("clahe", enhance.clahe, gray, enhance.ClaheConfig(cfg.clahe_cols, cfg.clahe_rows, cfg.clip_limit))
    debug.dump("clahe", clahe_img)
    bank = _stage("gabor", gabor.make_bank, cfg.kernel_size, cfg.freq, cfg.variance)
    responses = _stage("gabor", gabor.convolve_parallel, clahe_img, bank, cfg.threads)
    if debug.dir is not None:
        for m, resp in enumerate(responses):
            imagio.write_image(gabor.rescale_to_gray(resp), debug.dir / f"{debug.n + 1:02d}_gabor_m{m:02d}.pgm")
        debug.n += 1
    fused = _stage("fuse", gabor.fuse_responses, responses)
    debug.dump("fused", fused)
    return fused


def field_for(img, cfg: PipelineConfig) -> orientation.OrientationField:
    return orientation.orientation_field(img, cfg.block_size, cfg.std_threshold, cfg.smooth_passes)


def template_from_enhanced(enhanced, cfg: PipelineConfig, debug: Optional[_Debug] = None) -> MinutiaTemplate:
    """Core detection, cropping and minutiae extraction on a fused ridge image."""
    debug = debug or _Debug(None)
    field = _stage("orientation", field_for, enhanced, cfg)
    if debug.dir is not None:
        debug.dump("orientation", orientation_overlay(enhanced, field))
    core = _stage("corepoint", corepoint.detect_core, field)
    if core is None:
        raise StageError("corepoint", ValueError("no foreground found; cannot locate a core point"))
    log.info("core at (%d, %d) index=%+.1f confidence=%.3f", core.x, core.y, core.index_value, core.confidence)
    debug.dump("core", crosshair(enhanced, core.x, core.y))

    acfg = cfg.align_config()
    cropped = _stage("align", align.crop_about_core, enhanced, core, acfg)
    debug.dump("cropped", cropped)
    binary = _stage("binarize", minutiae.binarize_adaptive, cropped, cfg.binarize_window)
    debug.dump("binary", np.where(binary, 0, 255).astype(np.uint8))
    skel = _stage("thin", minutiae.thin, binary)
    debug.dump("skeleton", np.where(skel, 0, 255).astype(np.uint8))
    crop_field = _stage("orientation", field_for, cropped, cfg)
    raw = _stage("extract", minutiae.extract_minutiae, skel, crop_field)
    centre = (cfg.crop_width // 2, cfg.crop_height // 2)
    return _stage("filter", minutiae.filter_minutiae, raw, crop_field.mask, cfg.block_size,
                  cfg.border_px, cfg.merge_px, centre)


def process_gray(gray, cfg: PipelineConfig, debug: Optional[_Debug] = None) -> MinutiaTemplate:
    debug = debug or _Debug(None)
    # Mirroring first keeps every later stage identical for pre-mirrored input.
    if cfg.mirror_enabled:
        gray = _stage("align", align.apply_mirror, gray, cfg.align_config())
        debug.dump("mirrored", gray)
    if cfg.prescale_enabled:
        period = _stage("prescale", align.estimate_ridge_period, gray)
        gray = _stage("prescale", align.prescale_to_ridge_period, gray, period, cfg.target_ridge_period)
        debug.dump("prescaled", gray)
    enhanced = enhance_image(gray, cfg, debug)
    return template_from_enhanced(enhanced, cfg, debug)


def run_pipeline(inputs, cfg: Optional[PipelineConfig] = None, output=None) -> MinutiaTemplate:
    """Image file(s) -> minutiae template, optionally written to ``output``."""
    cfg = cfg or PipelineConfig()
    paths = [inputs] if isinstance(inputs, (str, Path)) else list(inputs)
    if not paths:
        raise StageError("load", ValueError("no input images"))
    debug = _Debug(cfg.debug_dir)
    gray = _stage("load", load_gray_frames, paths, cfg)
    debug.dump("gray", gray)
    tpl = process_gray(gray, cfg, debug)
    if output is not None:
        _stage("write", minutiae.write_template, tpl, output)
    return tpl
