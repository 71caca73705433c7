"""Drift geometry and the sleeping-walk probability F(lambda, p).

F is the probability that a walk started at the origin, carrying i.i.d.
sleep marks Y(t) ~ Bernoulli(lambda/(1+lambda)) for t = 0, 1, ..., only
sees marks while strictly inside the drift half-space H = {<x, m> > 0}.
Finite horizons give a bracket: ``upper`` ignores marks after the horizon,
``lower`` also demands a displacement margin at the horizon.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numba import njit

from .jumps import JumpDistribution, ZeroDrift
from .rng import STREAM_FLAG, STREAM_WALK, absorb, key2, to_unit

HALFSPACE_RTOL = 1e-12


def drift_vector(p: JumpDistribution) -> np.ndarray:
    """Expected jump m = sum_z p(z) z; raises ZeroDrift if m = 0."""
    m = p.drift()
    if np.allclose(m, 0.0, atol=1e-12):
        raise ZeroDrift(f"jump distribution {p.describe()} has zero drift")
    return m


@dataclass(frozen=True)
class DriftGeometry:
    drift: np.ndarray

    def __post_init__(self):
        if np.allclose(self.drift, 0.0, atol=1e-12):
            raise ZeroDrift("drift vector is null")

    @classmethod
    def of(cls, p: JumpDistribution) -> "DriftGeometry":
        return cls(drift_vector(p))

    def in_halfspace(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        ip = float(x @ self.drift)
        return ip > HALFSPACE_RTOL * (np.linalg.norm(x) + 1.0) * np.linalg.norm(self.drift)


@dataclass(frozen=True)
class FEstimate:
    lower: float
    upper: float
    trials: int
    horizon: int
    se_lower: float
    se_upper: float
    lam: float = math.nan
    margin: str = "<X(h),m> >= <m,m>*h/2"
    time_origin: str = "t=0 included, X(0)=0 outside H"

    @property
    def standard_errors(self) -> tuple[float, float]:
        return self.se_lower, self.se_upper


class Interval(NamedTuple):
    lo: float
    hi: float


@njit(cache=True)
def _f_kernel(seed, s, offs, cum, m, horizon, trials, first_trial):
    d = offs.shape[1]
    walk_key = key2(seed, STREAM_WALK)
    flag_key = key2(seed, STREAM_FLAG)
    mm = 0.0
    for c in range(d):
        mm += m[c] * m[c]
    mnorm = math.sqrt(mm)
    need = mm * horizon / 2.0
    n_up = 0
    n_lo = 0
    pos = np.zeros(d, np.int64)
    for i in range(first_trial, first_trial + trials):
        for c in range(d):
            pos[c] = 0
        wk = absorb(walk_key, i)
        fk = absorb(flag_key, i)
        ok = True
        ip = 0.0
        for t in range(horizon + 1):
            ip = 0.0
            nrm = 0.0
            for c in range(d):
                ip += pos[c] * m[c]
                nrm += pos[c] * pos[c]
            if to_unit(absorb(fk, t)) < s:
                if ip <= 1e-12 * (math.sqrt(nrm) + 1.0) * mnorm:
                    ok = False
                    break
            if t == horizon:
                break
            u = to_unit(absorb(wk, t))
            k = 0
            while k < cum.shape[0] - 1 and u >= cum[k]:
                k += 1
            for c in range(d):
                pos[c] += offs[k, c]
        if ok:
            n_up += 1
            if ip >= need:
                n_lo += 1
    return n_lo, n_up


def estimate_F(lam: float, p: JumpDistribution, horizon: int, trials: int, seed: int) -> FEstimate:
    """Monte Carlo bracket for F(lambda, p).

    Trial i uses walk and mark streams keyed by (seed, i), so runs with the
    same seed share sample paths across horizons and sleep rates.
    """
    m = drift_vector(p)
    if horizon < 1 or trials < 1:
        raise ValueError("horizon and trials must be >= 1")
    if not lam >= 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    s = lam / (1.0 + lam) if math.isfinite(lam) else 1.0
    n_lo, n_up = _f_kernel(np.int64(seed), s, p.offset_array(), p.cumulative(), m.astype(float),
                           np.int64(horizon), np.int64(trials), np.int64(0))
    lo, up = n_lo / trials, n_up / trials
    return FEstimate(
        lower=lo, upper=up, trials=trials, horizon=horizon,
        se_lower=math.sqrt(lo * (1 - lo) / trials), se_upper=math.sqrt(up * (1 - up) / trials), lam=lam)


def upper_bound_1d(lam: float, p: JumpDistribution, f: FEstimate) -> Interval:
    """Bracket for 1 - F(lambda, p), the one-dimensional upper bound on mu_c."""
    if p.dim != 1:
        raise ValueError(f"upper_bound_1d needs a 1D jump law, got dimension {p.dim}")
    drift_vector(p)
    return Interval(1.0 - f.upper, 1.0 - f.lower)


def upper_bound_d(nu0: float, f: FEstimate) -> Interval:
    """Bracket for nu0 / F; ``hi`` is infinite when the lower estimate is 0."""
    if not 0.0 <= nu0 <= 1.0:
        raise ValueError(f"nu0 must lie in [0, 1], got {nu0}")
    if nu0 == 0.0:
        return Interval(0.0, 0.0)
    lo = nu0 / f.upper if f.upper > 0 else math.inf
    hi = nu0 / f.lower if f.lower > 0 else math.inf
    return Interval(lo, hi)
