"""Shared helpers for the experiment scripts."""

import argparse
from pathlib import Path

from ridgekit.matcher import MatchConfig, match_templates
from ridgekit.pipeline import PipelineConfig, config_from_mapping, load_config_file, run_pipeline


def base_parser(description: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--db", required=True, help="directory of <finger>_<impression>.pgm images")
    p.add_argument("--config", help="pipeline config file (key = value)")
    p.add_argument("--sensor", choices=("camera", "optical"), default="optical")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--max-fingers", type=int, default=10)
    p.add_argument("--out", default="results", help="output directory")
    p.add_argument("--plot", action="store_true", help="also write a PNG (needs matplotlib)")
    return p


def pipeline_config(args, **overrides) -> PipelineConfig:
    cfg = PipelineConfig(sensor=args.sensor, threads=args.threads)
    if args.config:
        cfg = config_from_mapping(load_config_file(args.config), cfg)
    return config_from_mapping(overrides, cfg) if overrides else cfg


def extractor(cfg: PipelineConfig):
    return lambda path: run_pipeline(path, cfg)


def scorer(cfg: MatchConfig = MatchConfig()):
    return lambda a, b: match_templates(a, b, cfg).normalized


def out_dir(args) -> Path:
    path = Path(args.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def save_plot(path, xs, ys, xlabel, ylabel, title, kind="line"):
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib not installed; skipping plot")
        return
    fig, ax = plt.subplots(figsize=(5, 3.5))
    if kind == "bar":
        ax.bar([str(x) for x in xs], ys)
    else:
        ax.plot(xs, ys, marker="o")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    print(f"wrote {path}")
