"""Diaconis-Fulton representation of activated random walk.

Sites carry states in N0 + {rho}; every site owns an i.i.d. stack of
instructions (move by a jump offset, or sleep).  Toppling a site uses its next
unused instruction.  Stabilizing a finite region produces the odometer, the
per-site count of instructions used, which does not depend on the order of
legal topples.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from functools import total_ordering
from typing import Callable, Iterable, Mapping

import numpy as np

from . import _kernels as K
from .jumps import JumpDistribution
from .rng import STREAM_POLICY, STREAM_SELECT, STREAM_TAPE, unit

Point = tuple[int, ...]

DEFAULT_BUDGET = 10**9


class IllegalTopple(RuntimeError):
    """Toppling a stable site."""


class IllegalOperation(RuntimeError):
    """A site-state operation applied outside its domain."""


class BudgetExceeded(RuntimeError):
    """Stabilization hit its topple budget before the region was stable."""

    def __init__(self, budget: int, odometer: "Odometer | None" = None):
        super().__init__(f"region not stable after {budget} topples; raise the budget")
        self.budget = budget
        self.odometer = odometer


# --------------------------------------------------------------------------
# site states

@total_ordering
@dataclass(frozen=True)
class SiteState:
    """Occupancy of one site: empty, one sleeping particle, or k active ones."""

    active: int = 0
    sleeping: bool = False

    def __post_init__(self):
        if self.active < 0:
            raise ValueError("active count must be non-negative")
        if self.sleeping and self.active:
            raise ValueError("a sleeping particle never shares its site")

    @property
    def rank(self) -> float:
        # 0 < rho < 1 < 2 < ...
        return 0.5 if self.sleeping else float(self.active)

    def __lt__(self, other: "SiteState") -> bool:
        return self.rank < other.rank

    def __abs__(self) -> int:
        return 1 if self.sleeping else self.active

    @property
    def is_empty(self) -> bool:
        return not self.sleeping and self.active == 0

    @property
    def is_unstable(self) -> bool:
        return self.active >= 1

    @property
    def code(self) -> int:
        return -1 if self.sleeping else self.active

    @classmethod
    def from_code(cls, code: int) -> "SiteState":
        if code == -1:
            return SLEEPING
        if code == 0:
            return EMPTY
        return cls(active=int(code))

    def __repr__(self):
        if self.sleeping:
            return "Sleeping"
        return "Empty" if self.active == 0 else f"Active({self.active})"


EMPTY = SiteState()
SLEEPING = SiteState(sleeping=True)


def Active(k: int) -> SiteState:
    if k < 1:
        raise ValueError("Active needs k >= 1")
    return SiteState(active=k)


def add_particle(state: SiteState) -> SiteState:
    """One more particle arrives; it wakes a sleeper (A + S -> 2A)."""
    return SiteState(active=abs(state) + 1)


def sleep_transform(state: SiteState) -> SiteState:
    """Effect of a sleep instruction: a lone active particle falls asleep."""
    if not state.is_unstable:
        raise IllegalOperation(f"sleep applied to stable state {state!r}")
    return SLEEPING if state.active == 1 else state


# --------------------------------------------------------------------------
# instructions and tapes

@dataclass(frozen=True)
class Move:
    offset: Point


@dataclass(frozen=True)
class Sleep:
    pass


@dataclass(frozen=True)
class Neutral:
    pass


SLEEP = Sleep()
NEUTRAL = Neutral()
Instruction = Move | Sleep | Neutral


@dataclass(frozen=True)
class TapeStore:
    """Lazily materialized instruction stacks tau^{x,j}, j = 1, 2, ...

    Instruction j at site x is ``Sleep`` with probability lam/(1+lam) and a
    move by z with probability p(z)/(1+lam), computed from a keyed hash of
    (seed, x, j) so re-reading always gives the same instruction.
    """

    jumps: JumpDistribution
    lam: float
    seed: int

    def __post_init__(self):
        if not (self.lam >= 0 and np.isfinite(self.lam)):
            raise ValueError(f"sleep rate must be finite and >= 0, got {self.lam}")

    @property
    def sleep_prob(self) -> float:
        return self.lam / (1.0 + self.lam)

    def code(self, x: Point, j: int) -> int:
        if j < 1:
            raise ValueError("instruction indices start at 1")
        u = unit(self.seed, STREAM_TAPE, *x, j)
        s = self.sleep_prob
        if u < s:
            return K.SLEEP_CODE
        w = (u - s) / (1.0 - s)
        cum = self.jumps.cumulative()
        return int(min(np.searchsorted(cum, w, side="right"), len(cum) - 1))

    def instruction(self, x: Point, j: int) -> Instruction:
        c = self.code(tuple(x), j)
        return SLEEP if c == K.SLEEP_CODE else Move(self.jumps.offsets[c])


@dataclass(frozen=True)
class HashedSelection:
    """Select each (site, index) independently with probability ``fraction``."""

    fraction: float
    seed: int = 0

    def __call__(self, x: Point, j: int) -> bool:
        if self.fraction <= 0:
            return False
        if self.fraction >= 1:
            return True
        return unit(self.seed, STREAM_SELECT, *x, j) < self.fraction


SELECT_NONE = HashedSelection(0.0)
SELECT_ALL = HashedSelection(1.0)


@dataclass(frozen=True)
class ActivationView:
    """Tapes with every selected Sleep read as Neutral."""

    base: object
    selection: Callable[[Point, int], bool]

    @property
    def jumps(self) -> JumpDistribution:
        return self.base.jumps

    def instruction(self, x: Point, j: int) -> Instruction:
        ins = self.base.instruction(x, j)
        if isinstance(ins, Sleep) and self.selection(tuple(x), j):
            return NEUTRAL
        return ins


def enforce_activation(tapes, selection: Callable[[Point, int], bool] | None = None) -> ActivationView:
    """View of ``tapes`` where selected Sleep instructions become Neutral."""
    return ActivationView(tapes, SELECT_NONE if selection is None else selection)


@dataclass
class ExplicitTapes:
    """Hand-written instruction lists, falling back to ``fallback`` past their end."""

    jumps: JumpDistribution
    lists: dict
    fallback: object | None = None

    def instruction(self, x: Point, j: int) -> Instruction:
        seq = self.lists.get(tuple(x), ())
        if j <= len(seq):
            return seq[j - 1]
        if self.fallback is None:
            raise IndexError(f"tape at {x} has no instruction {j}")
        return self.fallback.instruction(x, j)


# --------------------------------------------------------------------------
# configurations and odometers

def _pt(x) -> Point:
    if isinstance(x, (int, np.integer)):
        return (int(x),)
    return tuple(int(c) for c in x)


def _key(x: Point) -> str:
    return ",".join(str(c) for c in x)


def _unkey(s: str) -> Point:
    return tuple(int(c) for c in s.split(","))


@dataclass
class Configuration:
    """Finite particle configuration; absent sites are empty."""

    dim: int
    sites: dict = field(default_factory=dict)

    def __post_init__(self):
        self.sites = {_pt(x): s for x, s in self.sites.items() if not s.is_empty}
        for x in self.sites:
            if len(x) != self.dim:
                raise ValueError(f"site {x} does not have dimension {self.dim}")

    @classmethod
    def from_counts(cls, dim: int, counts: Mapping) -> "Configuration":
        """All-active configuration from particle counts."""
        return cls(dim, {_pt(x): SiteState(active=int(n)) for x, n in counts.items() if n})

    def __getitem__(self, x) -> SiteState:
        return self.sites.get(_pt(x), EMPTY)

    def __setitem__(self, x, state: SiteState):
        x = _pt(x)
        if state.is_empty:
            self.sites.pop(x, None)
        else:
            self.sites[x] = state

    def copy(self) -> "Configuration":
        return Configuration(self.dim, dict(self.sites))

    def total(self) -> int:
        return sum(abs(s) for s in self.sites.values())

    def unstable_sites(self, region: Iterable[Point] | None = None) -> list[Point]:
        pts = self.sites if region is None else region
        return sorted(x for x in pts if self[x].is_unstable)

    def __eq__(self, other):
        return isinstance(other, Configuration) and self.dim == other.dim and self.sites == other.sites

    def __le__(self, other: "Configuration") -> bool:
        return all(s <= other[x] for x, s in self.sites.items())

    def to_json(self) -> str:
        out = {}
        for x in sorted(self.sites):
            s = self.sites[x]
            out[_key(x)] = "s" if s.sleeping else s.active
        return json.dumps(out, sort_keys=False)

    @classmethod
    def from_json(cls, text: str, dim: int | None = None) -> "Configuration":
        raw = json.loads(text)
        sites = {}
        for k, v in raw.items():
            sites[_unkey(k)] = SLEEPING if v == "s" else SiteState(active=int(v))
        if dim is None:
            dim = len(next(iter(sites))) if sites else 1
        return cls(dim, sites)


@dataclass
class Odometer:
    """Per-site count of used instructions."""

    counts: dict = field(default_factory=dict)

    def __post_init__(self):
        self.counts = {_pt(x): int(n) for x, n in self.counts.items() if n}

    def __getitem__(self, x) -> int:
        return self.counts.get(_pt(x), 0)

    def bump(self, x: Point) -> None:
        self.counts[x] = self.counts.get(x, 0) + 1

    def copy(self) -> "Odometer":
        return Odometer(dict(self.counts))

    def total(self) -> int:
        return sum(self.counts.values())

    def __eq__(self, other):
        return isinstance(other, Odometer) and self.counts == other.counts

    def __le__(self, other: "Odometer") -> bool:
        return all(n <= other[x] for x, n in self.counts.items())

    def to_json(self) -> str:
        return json.dumps({_key(x): self.counts[x] for x in sorted(self.counts)})

    @classmethod
    def from_json(cls, text: str) -> "Odometer":
        return cls({_unkey(k): v for k, v in json.loads(text).items()})


# --------------------------------------------------------------------------
# toppling

def _use(config: Configuration, odometer: Odometer, tapes, x: Point) -> Point | None:
    """In-place Phi_x; returns the destination of a move, else None."""
    state = config[x]
    if not state.is_unstable:
        raise IllegalTopple(f"site {x} is stable ({state!r}); toppling it is illegal")
    j = odometer[x] + 1
    odometer.bump(x)
    ins = tapes.instruction(x, j)
    if isinstance(ins, Move):
        y = tuple(a + b for a, b in zip(x, ins.offset))
        config[x] = SiteState(active=state.active - 1)
        config[y] = add_particle(config[y])
        return y
    if isinstance(ins, Sleep):
        config[x] = sleep_transform(state)
    return None


def topple(config: Configuration, odometer: Odometer, tapes, x) -> tuple[Configuration, Odometer]:
    """Use instruction h(x)+1 at ``x``; returns new (configuration, odometer)."""
    c, h = config.copy(), odometer.copy()
    _use(c, h, tapes, _pt(x))
    return c, h


# --------------------------------------------------------------------------
# policies

@dataclass(frozen=True)
class Policy:
    """Topple-order policy.  ``kind`` is fifo, lifo, sweep or random."""

    kind: str = "fifo"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in _POLICY_CODES:
            raise ValueError(f"unknown policy {self.kind!r}")

    @property
    def code(self) -> int:
        return _POLICY_CODES[self.kind]


_POLICY_CODES = {"fifo": K.FIFO, "lifo": K.LIFO, "sweep": K.SWEEP, "random": K.RANDOM}
FIFO = Policy("fifo")


def _as_policy(policy) -> Policy:
    if isinstance(policy, Policy):
        return policy
    return Policy(policy)


# --------------------------------------------------------------------------
# dense box for the jitted backend

class Box:
    """Dense bounding box around a region, padded by the jump radius."""

    def __init__(self, region: Iterable, jumps: JumpDistribution, extra: Iterable = ()):
        region = sorted({_pt(x) for x in region})
        if not region:
            raise ValueError("region must be non-empty")
        pts = np.array(region + [_pt(x) for x in extra], dtype=np.int64)
        r = jumps.radius()
        self.dim = pts.shape[1]
        self.lo = pts.min(axis=0) - r
        self.shape = tuple(int(v) for v in pts.max(axis=0) + r - self.lo + 1)
        self.n = int(np.prod(self.shape))
        grids = np.meshgrid(*[np.arange(lo, lo + m) for lo, m in zip(self.lo, self.shape)], indexing="ij")
        self.coords = np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)
        self.region = region
        self.inreg = np.zeros(self.n, dtype=np.bool_)
        self.inreg[self.flat(np.array(region))] = True
        offs = jumps.offset_array()
        self.nbr = np.full((self.n, len(offs)), -1, dtype=np.int64)
        for k, z in enumerate(offs):
            tgt = self.coords + z
            ok = np.all((tgt >= self.lo) & (tgt < self.lo + np.array(self.shape)), axis=1)
            self.nbr[ok, k] = self.flat(tgt[ok])
        self.jumps = jumps

    def flat(self, pts: np.ndarray) -> np.ndarray:
        rel = np.atleast_2d(pts) - self.lo
        return np.ravel_multi_index(tuple(rel.T), self.shape)

    def contains(self, x: Point) -> bool:
        rel = np.array(x) - self.lo
        return bool(np.all(rel >= 0) and np.all(rel < np.array(self.shape)))

    def encode(self, config: Configuration) -> np.ndarray:
        state = np.zeros(self.n, dtype=np.int64)
        for x, s in config.sites.items():
            if not self.contains(x):
                raise ValueError(f"occupied site {x} lies outside the box")
            state[self.flat(np.array(x))[0]] = s.code
        return state

    def decode(self, state: np.ndarray, odo: np.ndarray) -> tuple[Configuration, Odometer]:
        sites = {}
        for i in np.flatnonzero(state):
            sites[tuple(int(c) for c in self.coords[i])] = SiteState.from_code(int(state[i]))
        counts = {tuple(int(c) for c in self.coords[i]): int(odo[i]) for i in np.flatnonzero(odo)}
        return Configuration(self.dim, sites), Odometer(counts)

    def run(self, state, odo, tape_seed, lam, sel: HashedSelection = SELECT_NONE,
            policy: Policy = FIFO, budget: int = DEFAULT_BUDGET, stop_site: int = -1, stop_at: int = 0):
        """Stabilize in place on raw arrays; returns (status, topples)."""
        s = lam / (1.0 + lam)
        status, n = K.stabilize_kernel(
            state, self.inreg, self.coords, self.nbr, odo, np.int64(tape_seed), s,
            self.jumps.cumulative(), np.int64(sel.seed), float(sel.fraction),
            policy.code, np.int64(policy.seed), np.int64(budget), np.int64(stop_site), np.int64(stop_at))
        return int(status), int(n)


def _kernel_args(tapes):
    """(TapeStore, HashedSelection) if the jitted backend can read ``tapes``."""
    if isinstance(tapes, TapeStore):
        return tapes, SELECT_NONE
    if isinstance(tapes, ActivationView) and isinstance(tapes.base, TapeStore) \
            and isinstance(tapes.selection, HashedSelection):
        return tapes.base, tapes.selection
    return None


# --------------------------------------------------------------------------
# stabilization

def _reference_run(config: Configuration, odometer: Odometer, region: list[Point], tapes,
                   policy: Policy, budget: int, stop: tuple[Point, int] | None) -> int:
    """Pure-python twin of the jitted kernel; mutates its arguments."""
    inreg = set(region)
    topples = 0

    def hit_stop(x):
        return stop is not None and x == stop[0] and odometer[x] >= stop[1]

    if stop is not None and odometer[stop[0]] >= stop[1]:
        return K.STOPPED
    if policy.kind == "sweep":
        changed = True
        while changed:
            changed = False
            for x in region:
                while config[x].is_unstable:
                    if topples >= budget:
                        return K.BUDGET
                    _use(config, odometer, tapes, x)
                    topples += 1
                    changed = True
                    if hit_stop(x):
                        return K.STOPPED
        return K.STABLE
    if policy.kind == "random":
        live = [x for x in region if config[x].is_unstable]
        pos = {x: i for i, x in enumerate(live)}
        while live:
            if topples >= budget:
                return K.BUDGET
            r = min(int(unit(policy.seed, STREAM_POLICY, topples) * len(live)), len(live) - 1)
            x = live[r]
            y = _use(config, odometer, tapes, x)
            topples += 1
            if hit_stop(x):
                return K.STOPPED
            if not config[x].is_unstable:
                last = live.pop()
                if last != x:
                    live[r] = last
                    pos[last] = r
                del pos[x]
            if y is not None and y in inreg and config[y].is_unstable and y not in pos:
                pos[y] = len(live)
                live.append(y)
        return K.STABLE
    queue = deque(x for x in region if config[x].is_unstable)
    queued = set(queue)
    while queue:
        x = queue.popleft() if policy.kind == "fifo" else queue.pop()
        queued.discard(x)
        if not config[x].is_unstable:
            continue
        if topples >= budget:
            return K.BUDGET
        y = _use(config, odometer, tapes, x)
        topples += 1
        if hit_stop(x):
            return K.STOPPED
        if config[x].is_unstable and x not in queued:
            queue.append(x)
            queued.add(x)
        if y is not None and y in inreg and config[y].is_unstable and y not in queued:
            queue.append(y)
            queued.add(y)
    return K.STABLE


def _run(config, region, tapes, policy, budget, odometer=None, stop=None, backend="auto"):
    region = sorted({_pt(x) for x in region})
    policy = _as_policy(policy)
    if budget <= 0:
        raise ValueError("budget must be positive")
    odometer = Odometer() if odometer is None else odometer.copy()
    kargs = _kernel_args(tapes) if backend != "reference" else None
    if backend == "kernel" and kargs is None:
        raise ValueError("these tapes cannot be read by the jitted backend")
    if kargs is None:
        config = config.copy()
        if not region:
            return K.STABLE, odometer, config
        status = _reference_run(config, odometer, region, tapes, policy, budget, stop)
        return status, odometer, config
    if not region:
        return K.STABLE, odometer, config.copy()
    base, sel = kargs
    box = Box(region, base.jumps, extra=list(config.sites) + list(odometer.counts))
    state = box.encode(config)
    odo = np.zeros(box.n, dtype=np.int64)
    for x, n in odometer.counts.items():
        odo[box.flat(np.array(x))[0]] = n
    stop_site, stop_at = -1, 0
    if stop is not None:
        stop_site, stop_at = int(box.flat(np.array(stop[0]))[0]), int(stop[1])
    status, _ = box.run(state, odo, base.seed, base.lam, sel, policy, budget, stop_site, stop_at)
    out_config, out_odo = box.decode(state, odo)
    return status, out_odo, out_config


def stabilize(config: Configuration, region: Iterable, tapes, policy="fifo",
              budget: int = DEFAULT_BUDGET, backend: str = "auto") -> tuple[Odometer, Configuration]:
    """Topple unstable sites of ``region`` until none remain.

    Particles that leave the region rest where they land.  The returned
    odometer and configuration do not depend on ``policy``.

    Raises
    ------
    BudgetExceeded
        If ``budget`` topples were used and the region is still unstable.
    """
    status, odo, out = _run(config, region, tapes, policy, budget, backend=backend)
    if status == K.BUDGET:
        raise BudgetExceeded(budget, odo)
    return odo, out


def legal_prefix(config: Configuration, region: Iterable, tapes, policy, n_topples: int,
                 backend: str = "auto") -> tuple[Odometer, Configuration, bool]:
    """Run at most ``n_topples`` legal topples inside ``region``.

    Returns (odometer, configuration, finished) where ``finished`` tells
    whether the region became stable within the allowance.
    """
    if n_topples == 0:
        return Odometer(), config.copy(), not config.unstable_sites(region)
    status, odo, out = _run(config, region, tapes, policy, n_topples, backend=backend)
    return odo, out, status == K.STABLE


def stabilize_until(config: Configuration, region: Iterable, tapes, site, threshold: int,
                    policy="fifo", budget: int = DEFAULT_BUDGET) -> tuple[int, bool]:
    """Odometer value at ``site``, capped at ``threshold``.

    Stops as soon as ``site`` has been toppled ``threshold`` times; by least
    action the full odometer is at least that large.  Returns
    (min(m(site), threshold), reached).
    """
    status, odo, _ = _run(config, region, tapes, policy, budget, stop=(_pt(site), threshold))
    if status == K.BUDGET:
        raise BudgetExceeded(budget, odo)
    return min(odo[site], threshold), status == K.STOPPED


def box_region(lo: Iterable[int], hi: Iterable[int]) -> list[Point]:
    """All lattice points of the box [lo, hi] (inclusive)."""
    axes = [range(a, b + 1) for a, b in zip(lo, hi)]
    grids = np.meshgrid(*[np.array(a) for a in axes], indexing="ij")
    return [tuple(int(c) for c in p) for p in np.stack([g.ravel() for g in grids], axis=1)]
