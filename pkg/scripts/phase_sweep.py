"""Fixation sweeps of totally asymmetric ARW at two sleep rates.

At q = 1 the critical density is lambda/(1+lambda); the summary JSON next
to each CSV holds the crossing estimate and the analytic bracket.
"""
import argparse
import os
import sys

from arwlab.cli import main as cli


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lams", default="0.25,1")
    ap.add_argument("--trials", default="200")
    ap.add_argument("--seed", default="0")
    ap.add_argument("--outdir", default="results/phase")
    a = ap.parse_args(argv)
    os.makedirs(a.outdir, exist_ok=True)
    code = 0
    for lam in a.lams.split(","):
        code |= cli(["phase", "--lam", lam, "--q", "1", "--trials", a.trials, "--seed", a.seed,
                     "--out", os.path.join(a.outdir, f"phase_lam{lam}.csv")])
    return code


if __name__ == "__main__":
    sys.exit(main())
