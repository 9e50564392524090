"""Paired-trial method table over the multi-room suite (both signal models)."""
import argparse
import sys
from pathlib import Path

from beasst.cli import main as cli_main

SUITE = ["eight_rooms_exp.ini", "eight_rooms_pathloss.ini"]


def main(argv=None):
    root = Path(__file__).resolve().parents[1]
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="out/method_table")
    args = ap.parse_args(argv)
    cmd = ["bench", "--trials", str(args.trials), "--workers", str(args.workers), "--out", args.out]
    for name in SUITE:
        cmd += ["--config", str(root / "configs" / name)]
    return cli_main(cmd)


if __name__ == "__main__":
    sys.exit(main())
