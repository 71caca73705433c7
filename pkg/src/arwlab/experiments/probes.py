"""Fixation and activity probes: the odometer at the origin after
stabilizing the box [-L, L]^d from a random configuration.

Both probes stop a trial as soon as the origin has toppled often enough to
decide the indicator; by least action the full odometer is at least the
partial one, so the early stop changes no outcome.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .. import _kernels as K
from ..engine import DEFAULT_BUDGET, SELECT_NONE, Box, Policy, box_region
from ..jumps import JumpDistribution
from ..parallel import map_trials
from ..rng import STREAM_INIT, derive_seed, numpy_generator
from .initial import InitialLaw

Z95 = 1.959963984540054


def wilson_interval(k: int, n: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n == 0:
        return 0.0, 1.0
    p = k / n
    den = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass(frozen=True)
class ProbeEstimate:
    estimate: float
    ci_lo: float
    ci_hi: float
    successes: int
    trials: int  # completed trials, budget failures excluded
    budget_failures: int


def _estimate(hits: int, done: int, failed: int) -> ProbeEstimate:
    lo, hi = wilson_interval(hits, done)
    est = hits / done if done else math.nan
    return ProbeEstimate(est, lo, hi, hits, done, failed)


@lru_cache(maxsize=8)
def _box(L: int, jumps: JumpDistribution) -> tuple[Box, np.ndarray, int]:
    d = jumps.dim
    region = box_region([-L] * d, [L] * d)
    box = Box(region, jumps)
    return box, box.flat(np.array(region)), int(box.flat(np.zeros((1, d), dtype=np.int64))[0])


def _one_trial(args) -> int:
    """min(m(0), threshold) for one trial, or -1 if the budget ran out."""
    law, lam, jumps, L, threshold, seed, trial, policy, budget = args
    box, sites, origin = _box(L, jumps)
    ts = derive_seed(seed, trial)
    state = np.zeros(box.n, dtype=np.int64)
    state[sites] = law.draw(numpy_generator(ts, STREAM_INIT), len(sites))
    odo = np.zeros(box.n, dtype=np.int64)
    status, _ = box.run(state, odo, ts, lam, SELECT_NONE, Policy(policy, ts), budget, origin, threshold)
    if status == K.BUDGET:
        return -1
    return int(min(odo[origin], threshold))


def origin_odometers(law: InitialLaw, lam: float, p: JumpDistribution, L: int, threshold: int,
                     trials: int, seed: int, policy: str = "fifo", budget: int = DEFAULT_BUDGET,
                     workers: int = 1) -> np.ndarray:
    """Per-trial min(m(0), threshold); -1 marks a trial that hit the budget."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if L < 1:
        raise ValueError("L must be >= 1")
    if threshold < 1:
        raise ValueError("threshold must be >= 1")
    if not (lam >= 0 and math.isfinite(lam)):
        raise ValueError(f"lambda must be finite and >= 0, got {lam}")
    args = [(law, lam, p, L, threshold, seed, t, policy, budget) for t in range(trials)]
    return np.array(map_trials(_one_trial, args, workers), dtype=np.int64)


def fixation_probe(law: InitialLaw, lam: float, p: JumpDistribution, L: int, trials: int, seed: int,
                   *, policy: str = "fifo", budget: int = DEFAULT_BUDGET, workers: int = 1) -> ProbeEstimate:
    """Estimate P(m(0) = 0) for stabilization of [-L, L]^d."""
    m0 = origin_odometers(law, lam, p, L, 1, trials, seed, policy, budget, workers)
    ok = m0 >= 0
    return _estimate(int(np.sum(m0 == 0)), int(ok.sum()), int((~ok).sum()))


def activity_probe(law: InitialLaw, lam: float, p: JumpDistribution, L: int, c: float, trials: int,
                   seed: int, *, policy: str = "fifo", budget: int = DEFAULT_BUDGET,
                   workers: int = 1) -> ProbeEstimate:
    """Estimate P(m(0) >= c L) for stabilization of [-L, L]^d."""
    if not c > 0:
        raise ValueError(f"c must be positive, got {c}")
    thr = max(1, math.ceil(c * L))
    m0 = origin_odometers(law, lam, p, L, thr, trials, seed, policy, budget, workers)
    ok = m0 >= 0
    return _estimate(int(np.sum(m0 >= thr)), int(ok.sum()), int((~ok).sum()))
