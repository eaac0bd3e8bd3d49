"""FVC-protocol ROC and EER for one pipeline configuration.

    python scripts/roc_curve.py --db data/synth --plot
"""

import numpy as np

from ridgekit.evaluation import compute_roc, fvc_protocol, write_report

from _common import base_parser, extractor, out_dir, pipeline_config, scorer


def main():
    p = base_parser(__doc__.splitlines()[0])
    args = p.parse_args()
    cfg = pipeline_config(args)
    scores = fvc_protocol(args.db, extractor(cfg), scorer(), args.max_fingers)
    report = compute_roc(scores, metadata=cfg.snapshot())
    out = out_dir(args)
    write_report(report, scores, out)
    print(f"EER {report.eer:.4f} at threshold {report.eer_threshold:.3f}; "
          f"{len(scores.genuine)} genuine / {len(scores.impostor)} impostor comparisons; "
          f"mean genuine {np.mean(scores.genuine):.3f}, mean impostor {np.mean(scores.impostor):.3f}")
    if args.plot:
        try:
            import matplotlib
            matplotlib.use("Agg")
            import matplotlib.pyplot as plt
        except ImportError:
            print("matplotlib not installed; skipping plot")
            return
        far = [r[1] for r in report.roc]
        frr = [r[2] for r in report.roc]
        fig, ax = plt.subplots(figsize=(4.5, 4))
        ax.plot(far, frr, marker=".")
        ax.plot([0, 1], [0, 1], ls=":", c="grey")
        ax.scatter([report.eer], [report.eer], c="red", zorder=3, label=f"EER {report.eer:.3f}")
        ax.set_xlabel("FAR")
        ax.set_ylabel("FRR")
        ax.legend()
        ax.grid(alpha=0.3)
        fig.tight_layout()
        fig.savefig(out / "roc.png", dpi=120)
        print(f"wrote {out / 'roc.png'}")


if __name__ == "__main__":
    main()
