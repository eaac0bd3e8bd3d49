"""Write a synthetic FVC-style database (<finger>_<impression>.pgm).

    python scripts/make_synthetic_db.py --out data/synth --fingers 10 --impressions 8
"""

import argparse

from ridgekit.synth import make_synthetic_db


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", required=True)
    p.add_argument("--fingers", type=int, default=10)
    p.add_argument("--impressions", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--width", type=int, default=320)
    p.add_argument("--height", type=int, default=360)
    args = p.parse_args()
    paths = make_synthetic_db(args.out, args.fingers, args.impressions, args.seed, args.width, args.height)
    print(f"wrote {len(paths)} images to {args.out}")


if __name__ == "__main__":
    main()
