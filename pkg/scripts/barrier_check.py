"""Run the trap/barrier procedure until N successes and confirm m(0) = 0.

Each instance draws a Bernoulli configuration on [0, L] at density
frac * B(lambda, q), runs the procedure on hashed tapes, and when it
succeeds stabilizes the same configuration with the same tapes.
"""
import argparse
import csv
import sys

from arwlab.bounds import bound
from arwlab.engine import TapeStore, box_region, stabilize
from arwlab.experiments import Bernoulli, run_barrier_algorithm, sample_initial
from arwlab.jumps import nearest_neighbour_1d
from arwlab.rng import derive_seed


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cases", default="0.1:1,0.3:0.5,0.5:1,0.5:0.2", help="comma list of q:lambda")
    ap.add_argument("--frac", type=float, default=0.5, help="density as a fraction of B")
    ap.add_argument("--L", type=int, default=40)
    ap.add_argument("--successes", type=int, default=1000)
    ap.add_argument("--max-instances", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", required=True)
    a = ap.parse_args(argv)
    cases = [tuple(map(float, c.split(":"))) for c in a.cases.split(",")]
    region = box_region([0], [a.L])
    wins = bad = n = 0
    with open(a.out, "w", newline="") as fh:
        fh.write(f"# barrier_check frac={a.frac} L={a.L} successes={a.successes} seed={a.seed}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["instance", "q", "lambda", "mu", "particles", "success", "A_final", "m0"])
        while wins < a.successes and n < a.max_instances:
            q, lam = cases[n % len(cases)]
            ts = derive_seed(a.seed, n)
            mu = a.frac * bound(lam, q)
            eta = sample_initial(Bernoulli(mu), region, ts)
            tapes = TapeStore(nearest_neighbour_1d(q), lam, ts)
            st = run_barrier_algorithm(eta, tapes, q, lam, a.L)
            m0 = ""
            if st.success:
                odo, _ = stabilize(eta, region, tapes)
                m0 = odo[(0,)]
                wins += 1
                bad += m0 != 0
            w.writerow([n, q, lam, repr(mu), eta.total(), int(st.success), st.A[-1], m0])
            n += 1
    print(f"{n} instances, {wins} successes, {bad} with m(0) != 0")
    return 0 if wins >= a.successes and bad == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
