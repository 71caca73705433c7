"""Empirical barrier increment of a single exploration.

One exploration starts at y with the previous barrier at 0 and the right
absorbing end at L + 1.  The walk steps +1 with probability q and carries
i.i.d. marks of probability lam/(1+lam).  The increment is
max{S(t) : T* <= t < T_0}: 0 when the walk escapes through L + 1, and
undefined (failure) when no mark occurs before T_0.

Only levels 0..M are simulated step by step.  A stretch spent above M (the
initial descent from y, and every excursion from M + 1 back to M) is drawn
in one go from its exact law: it escapes with the gambler's-ruin
probability, and otherwise it is marked with probability
1 - E[g^tau | return] where tau is its duration.  A mark above M forces the
increment beyond M, so levels k <= M come out exactly in law.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from ..bounds import a_plus, canonical_q
from ..rng import STREAM_WALK, absorb, key2, to_unit

OVERFLOW_TOL = 1e-12


@njit(cache=True)
def _escape_and_quiet(x, n, q, g):
    """For a walk at height x above the floor, with ceiling n:
    (P(ceiling before floor), E[g^tau; floor before ceiling])."""
    if q == 0.5:
        esc = x / n
    elif q == 0.0:
        esc = 0.0
    else:
        lr = math.log((1.0 - q) / q)
        # (r^x - 1)/(r^n - 1), r = (1-q)/q > 1, in log form
        esc = math.exp((x - n) * lr) * (-math.expm1(-x * lr)) / (-math.expm1(-n * lr))
    # f(x) = r_-^x (1 - rho^(n-x)) / (1 - rho^n), rho = r_-/r_+
    disc = 1.0 / (g * g) - 4.0 * q * (1.0 - q)
    sq = math.sqrt(max(disc, 0.0))
    if q == 0.0:
        quiet = g ** x
    else:
        rp = (1.0 / g + sq) / (2.0 * q)
        rm = (1.0 - q) / (q * rp)
        lrho = math.log(rm) - math.log(rp)
        quiet = math.exp(x * math.log(rm)) * (-math.expm1((n - x) * lrho)) / (-math.expm1(n * lrho))
    return esc, quiet


@njit(cache=True)
def _sample_kernel(seed, q, s, y, L, M, trials, first):
    """Histogram over 0..M, slot M+1 for 'beyond M', slot M+2 for failure."""
    g = 1.0 - s
    hist = np.zeros(M + 3, np.int64)
    base = key2(seed, STREAM_WALK)
    n_top = L + 1 - M  # ceiling height measured from level M
    exc_esc, exc_quiet = _escape_and_quiet(1, n_top, q, g)
    init_esc, init_quiet = _escape_and_quiet(y - M, n_top, q, g)
    for i in range(first, first + trials):
        h = absorb(base, i)
        c = 0
        # state: last mark level class; best = running max since the last mark
        marked = False
        best = -1  # max since last mark; > M encoded as M + 1
        escaped = False
        if y > M:
            u = to_unit(absorb(h, c))
            c += 1
            if u < init_esc:
                escaped = True
            else:
                v = to_unit(absorb(h, c))
                c += 1
                if v >= init_quiet / (1.0 - init_esc):
                    marked = True
                    best = M + 1
            pos = M
        else:
            pos = y
        while not escaped and pos > 0:
            if pos > M:
                # excursion from M + 1 back to M
                u = to_unit(absorb(h, c))
                c += 1
                if u < exc_esc:
                    escaped = True
                    break
                v = to_unit(absorb(h, c))
                c += 1
                if v >= exc_quiet / (1.0 - exc_esc):
                    marked = True
                    best = M + 1
                elif marked:
                    best = M + 1
                pos = M
                continue
            u = to_unit(absorb(h, c))
            c += 1
            if u < s:
                marked = True
                best = pos
            elif marked and pos > best:
                best = pos
            w = to_unit(absorb(h, c))
            c += 1
            if w < q:
                pos += 1
                if pos == L + 1:
                    escaped = True
            else:
                pos -= 1
        if escaped:
            hist[0] += 1
        elif not marked:
            hist[M + 2] += 1
        else:
            hist[best] += 1
    return hist


def literal_depth(q: float, lam: float, y: int) -> int:
    """Number of levels simulated step by step; the law of P(dA >= k) decays
    like A_+^{-k}, so beyond this depth the mass is below OVERFLOW_TOL."""
    qc = canonical_q(q)
    if qc == 0.0:
        rate = math.log1p(lam)
    else:
        rate = math.log(a_plus(qc, 1.0 / (1.0 + lam)))
    depth = max(16, math.ceil(-math.log(OVERFLOW_TOL) / rate) + 1)
    return min(depth, y)


@dataclass(frozen=True)
class DeltaASample:
    """Histogram of the increment: ``counts[k]`` for k = 0..depth,
    then ``beyond`` (k > depth) and ``failures`` (no mark at all)."""

    q: float
    lam: float
    y: int
    L: int
    trials: int
    counts: np.ndarray
    beyond: int
    failures: int

    @property
    def depth(self) -> int:
        return len(self.counts) - 1

    def pmf(self) -> np.ndarray:
        return self.counts / self.trials

    def tail(self, kmax: int) -> np.ndarray:
        """Empirical P(dA >= k) for k = 1..kmax (beyond-depth mass included)."""
        c = np.concatenate([self.counts, [self.beyond]]).astype(float)
        tails = np.cumsum(c[::-1])[::-1] / self.trials
        if kmax + 1 > len(tails):
            tails = np.concatenate([tails, np.full(kmax + 1 - len(tails), self.beyond / self.trials)])
        return tails[1:kmax + 1]

    def mean(self) -> float:
        """Mean over successful trials; beyond-depth mass is counted at depth + 1."""
        k = np.arange(len(self.counts))
        ok = self.trials - self.failures
        return float((k * self.counts).sum() + (self.depth + 1) * self.beyond) / ok

    def coarse(self, kmax: int) -> np.ndarray:
        """Probabilities of {0, 1, ..., kmax, > kmax, failure}."""
        c = np.concatenate([self.counts, [self.beyond]]).astype(float)
        head = np.zeros(kmax + 1)
        n = min(kmax + 1, len(c))
        head[:n] = c[:n]
        rest = c[kmax + 1:].sum()
        return np.concatenate([head, [rest, self.failures]]) / self.trials


def sample_delta_A_tilde(q: float, lam: float, y: int = 1000, L: int = 10**6, trials: int = 100_000,
                         seed: int = 0, first_trial: int = 0) -> DeltaASample:
    """Histogram of the barrier increment from start y with right end L + 1."""
    if not 0.0 <= q <= 0.5:
        raise ValueError(f"q={q} outside [0, 1/2]; reflect q -> 1 - q at the caller")
    if not (lam > 0 and math.isfinite(lam)):
        raise ValueError(f"lambda must be positive and finite, got {lam}")
    if not 1 <= y <= L:
        raise ValueError(f"need 1 <= y <= L, got y={y}, L={L}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    M = literal_depth(q, lam, y)
    s = lam / (1.0 + lam)
    hist = _sample_kernel(np.int64(seed), float(q), s, np.int64(y), np.int64(L), np.int64(M),
                          np.int64(trials), np.int64(first_trial))
    return DeltaASample(q, lam, y, L, trials, hist[:M + 1].copy(), int(hist[M + 1]), int(hist[M + 2]))


def total_variation(sample: DeltaASample, exact_tail: np.ndarray) -> float:
    """TV distance on {0, 1, ..., kmax, > kmax, failure} against the law
    whose P(dA >= k), k = 1..kmax+1, is ``exact_tail`` (no mass at 0)."""
    kmax = len(exact_tail) - 1
    pmf = np.zeros(kmax + 3)
    pmf[1:kmax + 1] = exact_tail[:-1] - exact_tail[1:]
    pmf[kmax + 1] = exact_tail[-1]
    return 0.5 * float(np.abs(sample.coarse(kmax) - pmf).sum())


def delta_A_convergence(q: float, lam: float, y: int = 1000, L: int = 10**6, trials: int = 100_000,
                        seed: int = 0, kmax: int = 10) -> tuple[float, DeltaASample, DeltaASample]:
    """Largest bin change, in binomial standard errors, when (y, L) is doubled.

    Both runs share the seed so the comparison isolates the effect of the
    proxy size rather than Monte Carlo noise.
    """
    a = sample_delta_A_tilde(q, lam, y, L, trials, seed)
    b = sample_delta_A_tilde(q, lam, 2 * y, 2 * L, trials, seed)
    pa, pb = a.coarse(kmax), b.coarse(kmax)
    pool = 0.5 * (pa + pb)
    se = np.sqrt(np.maximum(pool * (1 - pool), 1e-300) / trials)
    z = np.abs(pa - pb) / se
    z[(pa == pb)] = 0.0
    return float(z.max()), a, b
