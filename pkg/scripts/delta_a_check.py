"""Empirical barrier increment against the closed-form tail law.

Writes one CSV row per (q, lambda, k) and exits 1 if any TV distance is
above the threshold.
"""
import argparse
import csv
import sys

from arwlab.bounds import tail_probabilities
from arwlab.experiments.delta_a import sample_delta_A_tilde, total_variation

KMAX = 10


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cases", default="0.5:1,0.3:0.5", help="comma list of q:lambda")
    ap.add_argument("--y", type=int, default=1000)
    ap.add_argument("--L", type=int, default=10**6)
    ap.add_argument("--trials", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--tv-max", type=float, default=0.01)
    ap.add_argument("--out", required=True)
    a = ap.parse_args(argv)
    ok = True
    with open(a.out, "w", newline="") as fh:
        fh.write(f"# delta_a_check y={a.y} L={a.L} trials={a.trials} seed={a.seed}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["q", "lambda", "k", "empirical", "exact", "tv", "failures"])
        for case in a.cases.split(","):
            q, lam = map(float, case.split(":"))
            s = sample_delta_A_tilde(q, lam, a.y, a.L, a.trials, a.seed)
            tail = tail_probabilities(lam, q, KMAX + 1)
            tv = total_variation(s, tail)
            ok &= tv < a.tv_max
            emp = s.coarse(KMAX)
            exact = [0.0] + list(tail[:-1] - tail[1:]) + [tail[-1], 0.0]
            labels = list(range(KMAX + 1)) + [f">{KMAX}", "failure"]
            for k, e, x in zip(labels, emp, exact):
                w.writerow([q, lam, k, repr(float(e)), repr(float(x)), repr(tv), s.failures])
            print(f"q={q} lambda={lam}: TV={tv:.5f} mean={s.mean():.4f}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
