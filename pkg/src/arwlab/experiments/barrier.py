"""Left-to-right trap/barrier stabilization of [0, L] for 1D nearest-neighbour ARW.

Each particle explores the tapes from its start until it reaches the
previous barrier or L + 1.  Reading is destructive: a per-site cursor makes
sure no instruction is read twice across explorations.  At each step the
explorer reads instructions at its site until the first move; the step is
marked (Y = 1) when the first instruction read was a Sleep.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..engine import Configuration, Move, Sleep, Neutral

INF = math.inf


@dataclass
class ExplorationRecord:
    X: int
    S: list[int]
    Y: list[int]  # Y[T] is 0: nothing is read at the stopping site
    T: int
    right_end: int = field(default=0, repr=False)

    @property
    def hit_barrier(self) -> bool:
        return self.S[-1] != self.right_end


@dataclass
class BarrierState:
    A: list = field(default_factory=list)  # A[0] = 0, then one entry per particle
    traps: list = field(default_factory=list)
    success: bool = True
    explorations: list = field(default_factory=list)

    @property
    def barrier(self):
        return self.A[-1]


def _explore(x: int, barrier: int, L: int, tapes, cursor: dict, max_steps: int) -> ExplorationRecord:
    S, Y = [x], []
    pos = x
    while pos != barrier and pos != L + 1:
        if len(Y) >= max_steps:
            raise RuntimeError(f"exploration from {x} exceeded {max_steps} steps")
        first = True
        mark = 0
        while True:
            j = cursor.get(pos, 0) + 1
            cursor[pos] = j
            ins = tapes.instruction((pos,), j)
            if isinstance(ins, Move):
                break
            if first and isinstance(ins, Sleep):
                mark = 1
            first = False
            if not isinstance(ins, (Sleep, Neutral)):
                raise TypeError(f"unexpected instruction {ins!r}")
        if abs(ins.offset[0]) != 1 or len(ins.offset) != 1:
            raise ValueError(f"barrier algorithm needs nearest-neighbour 1D moves, got {ins.offset}")
        Y.append(mark)
        pos += ins.offset[0]
        S.append(pos)
    Y.append(0)
    return ExplorationRecord(X=x, S=S, Y=Y, T=len(S) - 1, right_end=L + 1)


def run_barrier_algorithm(eta: Configuration, tapes, q: float, lam: float, L: int,
                          max_steps: int = 10**8) -> BarrierState:
    """Trap/barrier procedure with starting barrier A^0 = 0.

    Particles are taken left to right; several particles on one site are
    taken one after another.  ``q`` and ``lam`` are the parameters the tapes
    were drawn with and are only checked for their domain.

    Raises
    ------
    ValueError
        If ``q > 1/2`` (reflect the lattice first) or ``eta`` has particles
        outside [0, L] or sleeping particles.
    """
    if not 0.0 <= q <= 0.5:
        raise ValueError(f"q={q} outside [0, 1/2]; reflect q -> 1 - q at the caller")
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    starts = []
    for (x,), st in sorted(eta.sites.items()):
        if not 0 <= x <= L:
            raise ValueError(f"particle at {x} lies outside [0, {L}]")
        if st.sleeping:
            raise ValueError("initial particles must be active")
        starts += [x] * st.active
    out = BarrierState(A=[0], traps=[])
    cursor: dict = {}
    for x in starts:
        prev = out.A[-1]
        if not out.success:
            out.A.append(INF)
            out.traps.append(None)
            continue
        if x <= prev:
            out.success = False
            out.A.append(INF)
            out.traps.append(None)
            continue
        rec = _explore(x, prev, L, tapes, cursor, max_steps)
        out.explorations.append(rec)
        if not rec.hit_barrier:
            out.A.append(prev)  # escaped through L + 1
            out.traps.append(None)
            continue
        marks = [t for t in range(rec.T) if rec.Y[t]]
        if not marks:
            out.success = False
            out.A.append(INF)
            out.traps.append(None)
            continue
        t_star = marks[-1]
        out.traps.append(rec.S[t_star])
        out.A.append(max(rec.S[t_star:rec.T]))
    return out
