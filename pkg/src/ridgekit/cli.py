"""Command-line front end.

Exit codes: 0 success (or match), 1 no-match, 2 error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import evaluation, imagio, minutiae
from .matcher import MatchConfig, match_templates
from .pipeline import (
    PipelineConfig, StageError, config_from_mapping, enhance_image, load_config_file,
    load_gray_frames, run_pipeline, template_from_enhanced, _Debug,
)

EPILOG = """\
Input images must be 8-bit PGM (P5), PPM (P6) or PNG. FVC databases ship as
TIFF; convert them once before use, e.g.

  python -c "import sys; from PIL import Image; [Image.open(p).convert('L').save(p.rsplit('.',1)[0]+'.pgm') for p in sys.argv[1:]]" DB1_B/*.tif

Configuration precedence: command-line flags > --config file (key = value
lines, e.g. 'kernel_size = 21' or 'crop = 800x700') > built-in defaults.
"""

_PIPELINE_FLAGS = {
    "sensor": "sensor", "kernel_size": "kernel_size", "threads": "threads", "freq": "freq",
    "variance": "variance", "clahe_grid": "clahe_grid", "clip_limit": "clip_limit",
    "block_size": "block_size", "smooth_passes": "smooth_passes", "crop": "crop",
    "mirror": "mirror", "fill": "fill", "prescale": "prescale", "debug_dir": "debug_dir",
}


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("pipeline")
    g.add_argument("--config", help="key = value config file")
    g.add_argument("--sensor", choices=("camera", "optical"))
    g.add_argument("--kernel-size", type=int, metavar="K", help="Gabor kernel side (odd, default 21)")
    g.add_argument("--threads", type=int, metavar="N", help="convolution worker threads")
    g.add_argument("--freq", type=float, metavar="F", help="Gabor frequency, cycles/px (default 0.1)")
    g.add_argument("--variance", type=float, metavar="V", help="Gabor envelope variance, px^2 (default 16)")
    g.add_argument("--clahe-grid", metavar="CxR", help="CLAHE tile grid (default 8x8)")
    g.add_argument("--clip-limit", type=float, metavar="F", help="CLAHE clip limit (default 2.0)")
    g.add_argument("--block-size", type=int, metavar="R", help="orientation block size (default 16)")
    g.add_argument("--smooth-passes", type=int, metavar="N", help="orientation smoothing passes (default 2)")
    g.add_argument("--crop", metavar="WxH", help="crop around the core (default 800x700)")
    g.add_argument("--mirror", choices=("on", "off", "auto"), help="auto = on for camera input")
    g.add_argument("--fill", type=int, metavar="V", help="fill intensity outside the image (default 255)")
    g.add_argument("--prescale", choices=("on", "off", "auto"), help="ridge-period rescaling; auto = camera only")
    g.add_argument("--debug-dir", metavar="DIR", help="dump every intermediate stage as PGM")


def _config(args) -> PipelineConfig:
    cfg = PipelineConfig()
    if getattr(args, "config", None):
        cfg = config_from_mapping(load_config_file(args.config), cfg)
    flags = {key: getattr(args, attr) for attr, key in _PIPELINE_FLAGS.items()
             if getattr(args, attr, None) is not None}
    return config_from_mapping(flags, cfg)


def _match_config(args) -> MatchConfig:
    kw = {}
    if getattr(args, "threshold", None) is not None:
        kw["threshold"] = args.threshold
    return MatchConfig(**kw)


def _extractor(cfg: PipelineConfig):
    return lambda path: run_pipeline(path, cfg)


def _scorer(mcfg: MatchConfig):
    return lambda a, b: match_templates(a, b, mcfg).normalized


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_pipeline(args) -> int:
    cfg = _config(args)
    tpl = run_pipeline(args.inputs, cfg, args.output)
    print(f"wrote {args.output}: {len(tpl)} minutiae")
    return 0


def cmd_hdr_merge(args) -> int:
    frames = [imagio.to_grayscale(imagio.load_image(p)) for p in args.frames]
    imagio.write_image(imagio.hdr_merge(frames), args.output)
    return 0


def cmd_enhance(args) -> int:
    cfg = _config(args)
    gray = load_gray_frames(args.inputs, cfg)
    imagio.write_image(enhance_image(gray, cfg, _Debug(cfg.debug_dir)), args.output)
    return 0


def cmd_extract(args) -> int:
    cfg = _config(args)
    enhanced = imagio.to_grayscale(imagio.load_image(args.input))
    tpl = template_from_enhanced(enhanced, cfg, _Debug(cfg.debug_dir))
    minutiae.write_template(tpl, args.output)
    print(f"wrote {args.output}: {len(tpl)} minutiae")
    return 0


def cmd_match(args) -> int:
    a = minutiae.read_template(args.a)
    b = minutiae.read_template(args.b)
    res = match_templates(a, b, _match_config(args))
    print(f"score={res.score} normalized={res.normalized:.4f} decision={'match' if res.decision else 'nomatch'}")
    return 0 if res.decision else 1


def cmd_evaluate(args) -> int:
    cfg = _config(args)
    scores = evaluation.fvc_protocol(args.db, _extractor(cfg), _scorer(_match_config(args)), args.max_fingers)
    report = evaluation.compute_roc(scores, metadata=cfg.snapshot())
    evaluation.write_report(report, scores, args.out)
    print(f"EER={report.eer:.4f} at threshold {report.eer_threshold:.3f} "
          f"({len(scores.genuine)} genuine, {len(scores.impostor)} impostor)")
    return 0


def cmd_sweep_kernel(args) -> int:
    cfg = _config(args)
    sizes = [int(s) for s in args.sizes.split(",")] if args.sizes else list(evaluation.DEFAULT_SWEEP_SIZES)
    rows = evaluation.sweep_kernel(
        args.db, sizes, extract_for=lambda k: _extractor(config_from_mapping({"kernel_size": k}, cfg)),
        match=_scorer(_match_config(args)), max_fingers=args.max_fingers)
    _emit(evaluation.rows_csv(["size", "mean_score"], [(s, f"{v:.6f}") for s, v in rows]), args.out)
    return 0


def cmd_sweep_crop(args) -> int:
    cfg = _config(args)
    dims = [d for d in args.dims.split(",") if d]
    rows = evaluation.sweep_crop(
        args.db, dims, extract_for=lambda wh: _extractor(config_from_mapping({"crop": wh}, cfg)),
        match=_scorer(_match_config(args)), max_fingers=args.max_fingers)
    _emit(evaluation.rows_csv(["dims", "mean_score"], [(d, f"{v:.6f}") for d, v in rows]), args.out)
    return 0


def cmd_bench_threads(args) -> int:
    if args.image:
        img = imagio.to_grayscale(imagio.load_image(args.image))
    else:
        img = np.random.default_rng(args.seed).integers(0, 256, (args.size, args.size), dtype=np.uint8)
    counts = [int(c) for c in args.counts.split(",")]
    rows = evaluation.bench_threads(img, counts, kernel_size=args.kernel_size, repeats=args.repeats)
    _emit(evaluation.rows_csv(["threads", "wall_ms"], [(n, f"{ms:.3f}") for n, ms in rows]), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ridgekit", description="Finger-photo enhancement, minutiae extraction and matching.",
        epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_, pipeline_flags=True):
        p = sub.add_parser(name, help=help_, epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
        if pipeline_flags:
            _add_pipeline_flags(p)
        p.set_defaults(func=fn)
        return p

    p = add("pipeline", cmd_pipeline, "image (or 2-9 exposure frames) -> template")
    p.add_argument("inputs", nargs="+")
    p.add_argument("-o", "--output", required=True, help="template file (.fpt)")

    p = add("hdr-merge", cmd_hdr_merge, "fuse exposure brackets into one PGM", pipeline_flags=False)
    p.add_argument("frames", nargs="+")
    p.add_argument("-o", "--output", required=True)

    p = add("enhance", cmd_enhance, "CLAHE + Gabor bank -> fused ridge image")
    p.add_argument("inputs", nargs="+")
    p.add_argument("-o", "--output", required=True)

    p = add("extract", cmd_extract, "enhanced ridge image -> template")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)

    p = add("match", cmd_match, "compare two templates", pipeline_flags=False)
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--threshold", type=float, help="decision threshold on the normalized score (default 0.4)")

    for name, fn, help_ in (
        ("evaluate", cmd_evaluate, "FVC-protocol ROC/EER over a database directory"),
        ("sweep-kernel", cmd_sweep_kernel, "mean genuine score per Gabor kernel size"),
        ("sweep-crop", cmd_sweep_crop, "mean genuine score per crop size"),
    ):
        p = add(name, fn, help_)
        p.add_argument("--db", required=True, help="directory of <finger>_<impression>.<ext> images")
        p.add_argument("--threshold", type=float)
        p.add_argument("--max-fingers", type=int, default=None if name == "evaluate" else 10,
                       help="use only the first N fingers")
        if name == "evaluate":
            p.add_argument("--out", required=True, help="report directory (roc.csv, summary.txt)")
        else:
            p.add_argument("--out", help="CSV path (stdout if omitted)")
    sub.choices["sweep-kernel"].add_argument("--sizes", help="comma-separated odd sizes")
    sub.choices["sweep-crop"].add_argument("--dims", default="800x700", help="comma-separated WxH list")

    p = add("bench-threads", cmd_bench_threads, "time the 16-kernel bank per thread count", pipeline_flags=False)
    p.add_argument("--image", help="input image (default: random SIZE x SIZE)")
    p.add_argument("--size", type=int, default=1024)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--counts", default="1,2,3,4,5,6,7,8")
    p.add_argument("--kernel-size", type=int, default=21)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--out", help="CSV path (stdout if omitted)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (StageError, OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
