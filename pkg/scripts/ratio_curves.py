"""Gradient ratio against p for a few alphas, as CSV."""
import argparse
from pathlib import Path

from beasst.cli import ratio_table


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", default="0.5,0.8,1,1.5,2,2.5")
    ap.add_argument("--points", type=int, default=1000)
    ap.add_argument("--out", type=Path, default=Path("out/ratio_curves.csv"))
    args = ap.parse_args(argv)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(ratio_table([float(a) for a in args.alpha.split(",")], args.points))
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
