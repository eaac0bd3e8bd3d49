"""Mean genuine matching score as a function of the crop size around the core.

    python scripts/crop_sweep.py --db data/synth --dims 160x140,240x210,320x280 --plot
"""

from ridgekit.evaluation import rows_csv, sweep_crop

from _common import base_parser, extractor, out_dir, pipeline_config, save_plot, scorer


def main():
    p = base_parser(__doc__.splitlines()[0])
    p.add_argument("--dims", default="400x350,800x700,1200x1050", help="comma-separated WxH list")
    args = p.parse_args()
    dims = [d for d in args.dims.split(",") if d]
    rows = sweep_crop(args.db, dims, extract_for=lambda wh: extractor(pipeline_config(args, crop=wh)),
                      match=scorer(), max_fingers=args.max_fingers)
    out = out_dir(args)
    (out / "crop_sweep.csv").write_text(rows_csv(["dims", "mean_score"], [(d, f"{v:.6f}") for d, v in rows]))
    for d, v in rows:
        print(f"{d:>10}  {v:.4f}")
    if args.plot:
        save_plot(out / "crop_sweep.png", [r[0] for r in rows], [r[1] for r in rows],
                  "crop (WxH)", "mean genuine score", "Crop size sweep", kind="bar")


if __name__ == "__main__":
    main()
