"""Fixation/activity sweep over a density grid and the crossing rule.

One stabilization per trial serves both probes: the run stops once the
origin has toppled ceil(c L) times, which decides m(0) = 0 and
m(0) >= c L at once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..engine import DEFAULT_BUDGET
from ..jumps import JumpDistribution
from ..rng import derive_seed
from .initial import InitialLaw
from .probes import origin_odometers, wilson_interval

DECAY_FACTOR = 2.0


@dataclass(frozen=True)
class PhaseRow:
    mu: float
    L: int
    p_fix: float
    ci_lo: float
    ci_hi: float
    p_act: float
    budget_failures: int
    trials: int

    FIELDS = ("mu", "L", "p_fix", "ci_lo", "ci_hi", "p_act", "budget_failures", "trials")

    def values(self) -> tuple:
        return tuple(getattr(self, f) for f in self.FIELDS)


@dataclass(frozen=True)
class PhaseTable:
    rows: tuple[PhaseRow, ...]
    mus: tuple[float, ...]
    Ls: tuple[int, ...]

    def p_fix(self, mu: float, L: int) -> float:
        for r in self.rows:
            if r.mu == mu and r.L == L:
                return r.p_fix
        raise KeyError((mu, L))


def decays(p_small: float, p_large: float, factor: float = DECAY_FACTOR) -> bool:
    """p_fix(L_max) < p_fix(L_min)/factor; two zero estimates count as decay."""
    if p_small == 0.0 and p_large == 0.0:
        return True
    return p_large < p_small / factor


def detect_crossing(table: PhaseTable, factor: float = DECAY_FACTOR) -> dict:
    """Midpoint of the smallest decaying density and the stable grid point below it.

    Returns a dict with ``crossing`` (None if no point decays, or if the
    smallest grid point already decays), ``mu_stable`` and ``mu_decay``.
    """
    Lmin, Lmax = min(table.Ls), max(table.Ls)
    mus = sorted(table.mus)
    flags = [decays(table.p_fix(m, Lmin), table.p_fix(m, Lmax), factor) for m in mus]
    out = {"crossing": None, "mu_stable": None, "mu_decay": None,
           "decaying": [m for m, f in zip(mus, flags) if f]}
    if len(table.Ls) < 2 or not any(flags):
        return out
    i = flags.index(True)
    out["mu_decay"] = mus[i]
    if i > 0:
        out["mu_stable"] = mus[i - 1]
        out["crossing"] = 0.5 * (mus[i - 1] + mus[i])
    return out


def phase_sweep(law: InitialLaw, lam: float, p: JumpDistribution, mus, Ls, trials: int, seed: int, *,
                c: float = 0.05, policy: str = "fifo", budget: int = DEFAULT_BUDGET,
                workers: int = 1) -> PhaseTable:
    """Probe every (mu, L) cell; ``law`` fixes the family, its mu is replaced.

    Cell (i, j) uses seed derive_seed(seed, i, j) so each cell is
    reproducible on its own.
    """
    mus = [float(m) for m in mus]
    Ls = [int(L) for L in Ls]
    if not mus or not Ls:
        raise ValueError("density grid and L list must be non-empty")
    if not c > 0:
        raise ValueError(f"c must be positive, got {c}")
    rows = []
    for i, mu in enumerate(mus):
        cell_law = law.with_mu(mu)
        for j, L in enumerate(Ls):
            thr = max(1, math.ceil(c * L))
            m0 = origin_odometers(cell_law, lam, p, L, thr, trials, derive_seed(seed, i, j),
                                  policy, budget, workers)
            ok = m0 >= 0
            done = int(ok.sum())
            fix = int(np.sum(m0 == 0))
            act = int(np.sum(m0 >= thr))
            lo, hi = wilson_interval(fix, done)
            rows.append(PhaseRow(mu, L, fix / done if done else math.nan, lo, hi,
                                 act / done if done else math.nan, int((~ok).sum()), done))
    return PhaseTable(tuple(rows), tuple(mus), tuple(Ls))
