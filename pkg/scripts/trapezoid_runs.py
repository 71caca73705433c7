"""Trapezoid construction with ghost walks in two dimensions."""
import argparse
import os
import sys

from arwlab.cli import main as cli


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--runs", default="500")
    ap.add_argument("--L", default="50,100")
    ap.add_argument("--seed", default="0")
    ap.add_argument("--outdir", default="results/trapezoid")
    a = ap.parse_args(argv)
    os.makedirs(a.outdir, exist_ok=True)
    return cli(["trapezoid", "--runs", a.runs, "--L", a.L, "--seed", a.seed,
                "--out", os.path.join(a.outdir, "trapezoid.csv")])


if __name__ == "__main__":
    sys.exit(main())
