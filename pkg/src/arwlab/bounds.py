"""Lower bound B(lambda, q) on the critical density of 1D nearest-neighbour ARW.

The barrier increment of the trap/barrier stabilization procedure satisfies

    P(dA >= k) = E[g^{mu_{-k}} | mu_{-k} < mu_0],    g = 1/(1 + lambda),

where mu_m is the first hitting time of m by a walk started at -1 that steps
+1 with probability q.  E[dA] = sum_k P(dA >= k) and B = 1/E[dA].
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class BoundParams:
    lam: float
    q: float

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError(f"lambda must be a positive finite number, got {self.lam}")
        if not 0.0 <= self.q <= 1.0:
            raise ValueError(f"q must lie in [0, 1], got {self.q}")

    @property
    def g(self) -> float:
        return 1.0 / (1.0 + self.lam)


@dataclass(frozen=True)
class SeriesControl:
    tol: float = 1e-12
    max_k: int = 10_000
    oracle_max_steps: int = 2_000

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_k < 1 or self.oracle_max_steps < 1:
            raise ValueError("caps must be >= 1")


@dataclass(frozen=True)
class BoundReport:
    lam: float
    q: float
    B: float
    terms: int
    trunc_error: float  # estimated tail of the series E[dA]
    resolved: bool


def _check_qg(q: float, g: float, qmax: float = 1.0):
    if not 0.0 < q < 1.0 or q > qmax:
        raise ValueError(f"q={q} outside (0, {qmax}]")
    if not 0.0 < g <= 1.0:
        raise ValueError(f"g={g} outside (0, 1]")


def a_plus(q: float, g: float) -> float:
    """Larger root of A^2 - A/(g(1-q)) + q/(1-q) = 0."""
    _check_qg(q, g)
    disc = max(1.0 - 4.0 * q * (1.0 - q) * g * g, 0.0)
    return (1.0 + math.sqrt(disc)) / (2.0 * (1.0 - q) * g)


def a_minus(q: float, g: float) -> float:
    """Smaller root, via the product of roots (no cancellation)."""
    return q / ((1.0 - q) * a_plus(q, g))


def _log_one_minus_pow(log_base: float, k: int) -> float:
    """log(1 - base^k) for 0 <= base < 1 given log(base)."""
    if log_base == -math.inf:
        return 0.0
    return math.log(-math.expm1(k * log_base))


def ruin_prob(k: int, q: float) -> float:
    """P_{-1}(T_{-k} < T_0) for the walk stepping +1 w.p. q <= 1/2."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0.0 <= q <= 0.5:
        raise ValueError(f"q={q} outside [0, 1/2]; reflect q -> 1 - q first")
    if k == 1:
        return 1.0
    if q == 0.5:
        return 1.0 / k
    if q == 0.0:
        return 1.0
    log_r = math.log(q) - math.log1p(-q)
    one_minus_r = (1.0 - 2.0 * q) / (1.0 - q)
    return one_minus_r / -math.expm1(k * log_r)


def _log_conditional(k: int, q: float, g: float) -> float:
    if k == 1:
        return 0.0
    disc = max(1.0 - 4.0 * q * (1.0 - q) * g * g, 0.0)
    ap = (1.0 + math.sqrt(disc)) / (2.0 * (1.0 - q) * g)
    # 1 - A-/A+ = (A+ - A-)/A+ with A+ - A- = sqrt(disc)/(g(1-q))
    gap = math.sqrt(disc) / (g * (1.0 - q)) / ap
    log_rho = math.log1p(-gap) if gap < 1.0 else -math.inf
    log_u = (1 - k) * math.log(ap) + math.log(gap) - _log_one_minus_pow(log_rho, k)
    return log_u - math.log(ruin_prob(k, q))


def conditional_generating(k: int, q: float, g: float) -> float:
    """E[g^{mu_{-k}} | mu_{-k} < mu_0], which equals P(dA >= k)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0.0 < q <= 0.5:
        raise ValueError(f"q={q} outside (0, 1/2]")
    if not 0.0 < g < 1.0:
        raise ValueError(f"g={g} outside (0, 1); lambda = 0 is not supported")
    return math.exp(_log_conditional(k, q, g))


def oracle_conditional_generating(k: int, q: float, g: float, max_steps: int) -> tuple[float, float]:
    """First-passage dynamic program for E[g^{mu_{-k}} | mu_{-k} < mu_0].

    Propagates probability mass over the transient positions -k+1..-1,
    starting from a unit mass at -1.  Returns (value, bound) with
    |value - exact| <= bound; the bound covers the unexplored time tail, the
    unresolved absorption probability and floating-point rounding.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if max_steps < k - 1:
        raise ValueError("max_steps must be at least k - 1")
    if k == 1:
        return 1.0, 0.0
    mass = np.zeros(k - 1)
    mass[0] = 1.0  # index i is position -(i+1)
    num = 0.0
    absorbed = 0.0
    gn = 1.0
    for _ in range(max_steps):
        gn *= g
        hit = mass[-1] * (1.0 - q)
        new = np.empty_like(mass)
        new[:-1] = mass[1:] * q
        new[-1] = 0.0
        new[1:] += mass[:-1] * (1.0 - q)
        mass = new
        num += gn * hit
        absorbed += hit
    rest = float(mass.sum())
    value = num / absorbed
    lo = num / (absorbed + rest)
    hi = (num + rest * gn * g) / absorbed
    rounding = 4.0 * (max_steps + 2) * (k + 1) * EPS * value
    return value, max(value - lo, hi - value) + rounding


def hitting_before_prob(x: int, L: int, q: float) -> float:
    """P_x(T_{L+1} < T_0) for a walk stepping +1 w.p. q > 1/2."""
    if not 1 <= x <= L:
        raise ValueError("need 1 <= x <= L")
    if not 0.5 < q <= 1.0:
        raise ValueError(f"q={q} outside (1/2, 1]")
    if q == 1.0:
        return 1.0
    log_r = math.log1p(-q) - math.log(q)
    return math.expm1(x * log_r) / math.expm1((L + 1) * log_r)


def canonical_q(q: float) -> float:
    """Reflect q into [0, 1/2]; rounding makes B(q) and B(1-q) bit-identical."""
    return round(min(q, 1.0 - q), 15)


def tail_probabilities(lam: float, q: float, kmax: int) -> np.ndarray:
    """P(dA >= k) for k = 1..kmax."""
    q = canonical_q(q)
    g = 1.0 / (1.0 + lam)
    if q == 0.0:
        return g ** np.arange(kmax)
    return np.array([conditional_generating(k, q, g) for k in range(1, kmax + 1)])


def lower_bound_B(params: BoundParams, ctl: SeriesControl = SeriesControl()) -> BoundReport:
    """B(lambda, q) = 1 / sum_k P(dA >= k)."""
    lam = params.lam
    q = canonical_q(params.q)
    if q == 0.0:
        return BoundReport(params.lam, params.q, lam / (1.0 + lam), 0, 0.0, True)
    g = params.g
    total = 0.0
    prev = last = math.nan
    k = 0
    resolved = False
    while k < ctl.max_k:
        k += 1
        term = conditional_generating(k, q, g)
        total += term
        prev, last = last, term
        if term < ctl.tol:
            resolved = True
            break
    ratio = last / prev if k > 1 else 0.0
    trunc = last / (1.0 - ratio) if ratio < 1.0 else math.inf
    return BoundReport(params.lam, params.q, 1.0 / total, k, trunc, resolved)


def bound(lam: float, q: float, ctl: SeriesControl = SeriesControl()) -> float:
    return lower_bound_B(BoundParams(lam, q), ctl).B
