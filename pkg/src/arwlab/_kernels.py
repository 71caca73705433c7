"""Jitted inner loops for region stabilization.

Site states are int64 codes: 0 empty, -1 one sleeping particle, k >= 1
active particles.  Instruction codes: -1 sleep, -2 neutral, i >= 0 a move by
the i-th support offset.
"""
import numpy as np
from numba import njit

from .rng import STREAM_POLICY, STREAM_SELECT, STREAM_TAPE, absorb, key2, to_unit

FIFO = 0
LIFO = 1
SWEEP = 2
RANDOM = 3

STABLE = 0
BUDGET = 1
STOPPED = 2

SLEEP_CODE = -1
NEUTRAL_CODE = -2


@njit(cache=True)
def tape_code(tape_key, coords, i, j, s, cum):
    h = tape_key
    for c in range(coords.shape[1]):
        h = absorb(h, coords[i, c])
    u = to_unit(absorb(h, j))
    if u < s:
        return SLEEP_CODE
    w = (u - s) / (1.0 - s)
    for k in range(cum.shape[0]):
        if w < cum[k]:
            return k
    return cum.shape[0] - 1


@njit(cache=True)
def selected(sel_key, sel_frac, coords, i, j):
    if sel_frac <= 0.0:
        return False
    if sel_frac >= 1.0:
        return True
    h = sel_key
    for c in range(coords.shape[1]):
        h = absorb(h, coords[i, c])
    return to_unit(absorb(h, j)) < sel_frac


@njit(cache=True)
def _apply(state, odo, nbr, coords, i, tape_key, s, cum, sel_key, sel_frac):
    """Use the next instruction at flat site ``i``; returns destination or -1."""
    j = odo[i] + 1
    odo[i] = j
    code = tape_code(tape_key, coords, i, j, s, cum)
    if code == SLEEP_CODE:
        if selected(sel_key, sel_frac, coords, i, j):
            return -1
        if state[i] == 1:
            state[i] = -1
        return -1
    dest = nbr[i, code]
    state[i] -= 1
    if state[dest] == -1:
        state[dest] = 2
    else:
        state[dest] += 1
    return dest


@njit(cache=True)
def stabilize_kernel(state, inreg, coords, nbr, odo, seed, s, cum, sel_seed, sel_frac,
                     policy, policy_seed, budget, stop_site, stop_at):
    """Topple unstable region sites until none remain.

    Returns (status, topples).  ``stop_at`` > 0 ends the run early once the
    odometer at ``stop_site`` reaches it.
    """
    n = state.shape[0]
    tape_key = key2(seed, STREAM_TAPE)
    sel_key = key2(sel_seed, STREAM_SELECT)
    topples = 0
    if stop_at > 0 and odo[stop_site] >= stop_at:
        return STOPPED, topples

    if policy == SWEEP:
        changed = True
        while changed:
            changed = False
            for i in range(n):
                if not inreg[i]:
                    continue
                while state[i] > 0:
                    if topples >= budget:
                        return BUDGET, topples
                    _apply(state, odo, nbr, coords, i, tape_key, s, cum, sel_key, sel_frac)
                    topples += 1
                    changed = True
                    if stop_at > 0 and i == stop_site and odo[i] >= stop_at:
                        return STOPPED, topples
        return STABLE, topples

    if policy == RANDOM:
        pol_key = key2(policy_seed, STREAM_POLICY)
        pos = np.full(n, -1, np.int64)
        live = np.empty(n, np.int64)
        m = 0
        for i in range(n):
            if inreg[i] and state[i] > 0:
                live[m] = i
                pos[i] = m
                m += 1
        while m > 0:
            if topples >= budget:
                return BUDGET, topples
            r = int(to_unit(absorb(pol_key, topples)) * m)
            if r >= m:
                r = m - 1
            i = live[r]
            dest = _apply(state, odo, nbr, coords, i, tape_key, s, cum, sel_key, sel_frac)
            topples += 1
            if stop_at > 0 and i == stop_site and odo[i] >= stop_at:
                return STOPPED, topples
            if state[i] <= 0:
                # swap-remove
                last = live[m - 1]
                live[r] = last
                pos[last] = r
                pos[i] = -1
                m -= 1
            if dest >= 0 and inreg[dest] and state[dest] > 0 and pos[dest] < 0:
                live[m] = dest
                pos[dest] = m
                m += 1
        return STABLE, topples

    # FIFO / LIFO share one buffer; each site is queued at most once
    buf = np.empty(n, np.int64)
    inq = np.zeros(n, np.bool_)
    head = 0
    size = 0
    for i in range(n):
        if inreg[i] and state[i] > 0:
            buf[size] = i
            inq[i] = True
            size += 1
    while size > 0:
        if policy == FIFO:
            i = buf[head]
            head += 1
            if head == n:
                head = 0
        else:
            i = buf[(head + size - 1) % n]
        size -= 1
        inq[i] = False
        if state[i] <= 0:
            continue
        if topples >= budget:
            return BUDGET, topples
        dest = _apply(state, odo, nbr, coords, i, tape_key, s, cum, sel_key, sel_frac)
        topples += 1
        if stop_at > 0 and i == stop_site and odo[i] >= stop_at:
            return STOPPED, topples
        if state[i] > 0 and not inq[i]:
            buf[(head + size) % n] = i
            inq[i] = True
            size += 1
        if dest >= 0 and inreg[dest] and state[dest] > 0 and not inq[dest]:
            buf[(head + size) % n] = dest
            inq[dest] = True
            size += 1
    return STABLE, topples
