"""B(lambda, q) against q for a few sleep rates, one CSV per rate."""
import argparse
import os
import sys

from arwlab.cli import main as cli


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lams", default="0.001,0.1,1,10")
    ap.add_argument("--q", default="0:1:0.01")
    ap.add_argument("--outdir", default="results/bounds")
    a = ap.parse_args(argv)
    os.makedirs(a.outdir, exist_ok=True)
    code = 0
    for lam in a.lams.split(","):
        code |= cli(["bound", "--lam", lam, "--q", a.q, "--out", os.path.join(a.outdir, f"B_lam{lam}.csv")])
    return code


if __name__ == "__main__":
    sys.exit(main())
