"""Randomized checks of the stabilization contracts.

* order independence: two random legal topple orders give the same
  odometer and the same final configuration;
* least action: every legal prefix odometer is below the stabilizing one;
* monotonicity: m grows with the region and with the configuration;
* enforced activation: turning Sleep instructions into Neutral ones never
  lowers the odometer;
* oracle agreement: the closed-form hitting law against the dynamic program.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bounds import conditional_generating, oracle_conditional_generating
from .engine import (Configuration, HashedSelection, Policy, TapeStore, box_region, enforce_activation,
                     legal_prefix, stabilize)
from .jumps import JumpDistribution, nearest_neighbour_1d, nearest_neighbour_2d
from .rng import derive_seed, numpy_generator


@dataclass
class Instance:
    seed: int
    dim: int
    mu: float
    lam: float
    jumps: JumpDistribution
    region: list
    config: Configuration
    tapes: object

    def describe(self) -> str:
        return (f"seed={self.seed} dim={self.dim} mu={self.mu} lam={self.lam} "
                f"jumps={self.jumps.describe()} config={self.config.to_json()}")


def random_instance(seed: int, dim: int, mu: float, lam: float) -> Instance:
    """1D: region [-10, 10]; 2D: the 5x5 box [-2, 2]^2."""
    rng = numpy_generator(seed, 0)
    if dim == 1:
        jumps = nearest_neighbour_1d(float(rng.uniform(0.05, 0.95)))
        region = box_region([-10], [10])
    else:
        w = rng.uniform(0.1, 1.0, 4)
        w /= w.sum()
        w[-1] = 1.0 - w[:-1].sum()
        jumps = nearest_neighbour_2d(*w)
        region = box_region([-2, -2], [2, 2])
    counts = rng.poisson(mu, len(region))
    config = Configuration.from_counts(dim, {x: int(c) for x, c in zip(region, counts) if c})
    return Instance(seed, dim, mu, lam, jumps, region, config, TapeStore(jumps, lam, derive_seed(seed, 1)))


@dataclass
class PropertyResult:
    name: str
    trials: int = 0
    failures: int = 0
    reproducer: str | None = None

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def record(self, ok: bool, inst: Instance, detail: str = ""):
        self.trials += 1
        if not ok:
            self.failures += 1
            if self.reproducer is None:
                self.reproducer = inst.describe() + (f" {detail}" if detail else "")


def check_order_independence(inst: Instance, res: PropertyResult):
    a = Policy("random", derive_seed(inst.seed, 2))
    b = Policy("random", derive_seed(inst.seed, 3))
    odo_a, cfg_a = stabilize(inst.config, inst.region, inst.tapes, a)
    odo_b, cfg_b = stabilize(inst.config, inst.region, inst.tapes, b, backend="reference")
    res.record(odo_a == odo_b and cfg_a == cfg_b, inst, "orders random/2 vs random/3")
    return odo_a


def check_least_action(inst: Instance, full, res: PropertyResult):
    rng = numpy_generator(inst.seed, 4)
    n = int(rng.integers(0, max(1, full.total()) + 1))
    pol = Policy(["fifo", "lifo", "sweep", "random"][int(rng.integers(4))], derive_seed(inst.seed, 5))
    odo, _, _ = legal_prefix(inst.config, inst.region, inst.tapes, pol, n)
    res.record(odo <= full, inst, f"prefix of {n} topples under {pol.kind}")


def check_monotonicity(inst: Instance, full, res: PropertyResult):
    """Shrink the region and remove particles, m must not increase."""
    rng = numpy_generator(inst.seed, 6)
    sub = [x for x in inst.region if rng.random() < 0.7]
    smaller = Configuration(inst.dim, {x: s for x, s in inst.config.sites.items() if rng.random() < 0.7})
    for x, s in list(smaller.sites.items()):
        k = int(rng.integers(1, s.active + 1))
        smaller[x] = type(s)(active=k)
    odo, _ = stabilize(smaller, sub, inst.tapes)
    res.record(odo <= full, inst, f"sub-region of {len(sub)} sites, {smaller.total()} particles")


def check_enforced_activation(inst: Instance, full, res: PropertyResult):
    rng = numpy_generator(inst.seed, 7)
    frac = float(rng.uniform(0.1, 1.0))
    view = enforce_activation(inst.tapes, HashedSelection(frac, derive_seed(inst.seed, 8)))
    odo, _ = stabilize(inst.config, inst.region, view)
    res.record(full <= odo, inst, f"sleep->neutral fraction {frac:.3f}")


@dataclass
class SuiteReport:
    results: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def lines(self) -> list[str]:
        out = []
        for r in self.results:
            status = "PASS" if r.passed else "FAIL"
            out.append(f"{status} {r.name}: {r.trials} trials, {r.failures} failures")
            if r.reproducer:
                out.append(f"  reproducer: {r.reproducer}")
        return out


def contract_suite(seed: int, per_cell: int = 25, tape_wrapper=None) -> SuiteReport:
    """Run all stabilization checks over dim x mu x lambda cells.

    ``tape_wrapper`` (a callable on a TapeStore) replaces the tapes of every
    instance; it exists so a deliberately broken tape can be shown to fail.
    """
    names = ("order_independence", "least_action", "monotonicity", "enforced_activation")
    res = {n: PropertyResult(n) for n in names}
    cell = 0
    for dim in (1, 2):
        for mu in (0.3, 0.8):
            for lam in (0.1, 1.0):
                for t in range(per_cell):
                    inst = random_instance(derive_seed(seed, cell, t), dim, mu, lam)
                    if tape_wrapper is not None:
                        inst.tapes = tape_wrapper(inst.tapes)
                    full = check_order_independence(inst, res["order_independence"])
                    check_least_action(inst, full, res["least_action"])
                    check_monotonicity(inst, full, res["monotonicity"])
                    check_enforced_activation(inst, full, res["enforced_activation"])
                cell += 1
    return SuiteReport([res[n] for n in names])


def oracle_suite(ks=range(1, 6), qs=(0.2, 0.35, 0.5), lams=(0.5, 1.0), max_steps: int = 2000) -> SuiteReport:
    r = PropertyResult("closed_form_vs_dp")
    for lam in lams:
        g = 1.0 / (1.0 + lam)
        for q in qs:
            for k in ks:
                cf = conditional_generating(k, q, g)
                dp, tail = oracle_conditional_generating(k, q, g, max_steps)
                r.trials += 1
                if abs(cf - dp) > tail:
                    r.failures += 1
                    r.reproducer = r.reproducer or f"k={k} q={q} lam={lam}: {cf} vs {dp} (+-{tail})"
    return SuiteReport([r])


class CorruptedTapes:
    """Negative control: re-reading an instruction may give a different one."""

    def __init__(self, base: TapeStore):
        self.base = base
        self.jumps = base.jumps
        self.reads = 0

    def instruction(self, x, j):
        self.reads += 1
        return self.base.instruction(x, j + self.reads % 3)
