"""Mean genuine matching score as a function of the Gabor kernel size.

    python scripts/kernel_sweep.py --db data/synth --sizes 15,17,19,21,23,25,29,31,35 --plot
"""

from ridgekit.evaluation import DEFAULT_SWEEP_SIZES, rows_csv, sweep_kernel

from _common import base_parser, extractor, out_dir, pipeline_config, save_plot, scorer


def main():
    p = base_parser(__doc__.splitlines()[0])
    p.add_argument("--sizes", default=",".join(map(str, DEFAULT_SWEEP_SIZES)), help="comma-separated odd sizes")
    args = p.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    rows = sweep_kernel(args.db, sizes, extract_for=lambda k: extractor(pipeline_config(args, kernel_size=k)),
                        match=scorer(), max_fingers=args.max_fingers)
    out = out_dir(args)
    (out / "kernel_sweep.csv").write_text(rows_csv(["size", "mean_score"], [(s, f"{v:.6f}") for s, v in rows]))
    for s, v in rows:
        print(f"{s:4d}  {v:.4f}")
    best = max(rows, key=lambda r: r[1])
    print(f"best kernel size: {best[0]} (mean genuine score {best[1]:.4f})")
    if args.plot:
        save_plot(out / "kernel_sweep.png", [r[0] for r in rows], [r[1] for r in rows],
                  "kernel size (px)", "mean genuine score", "Kernel size sweep")


if __name__ == "__main__":
    main()
