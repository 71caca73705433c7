"""Two-dimensional trapezoid construction with ghost walks.

Coordinates: u = <x, e> along the unit drift axis e and v = <x, e_perp>.
The trapezoid is B_L = {-L <= u <= 0, |v| <= g (2L + u)}; its long side F
sits on u = 0 through the origin, the short side D on u = -L, and E, G are
the two slanted sides.  The cone C_g = {w : <w, e> >= 0, |<w, e_perp>| <= g <w, e>}
has edges parallel to E and G, and A_K = {|w| < K} is the Euclidean ball.

Particles are moved one at a time in order of increasing u.  A moving
particle uses the instructions of the site it stands on until

1. it draws a Sleep while in (A_K + z) minus (C_g + z), or at z itself,
2. it leaves (C_g + z) union (A_K + z),
4. it reaches a site of the inner boundary on the F side (checked before 3),
3. it reaches an empty site of (C_g + z) minus {z}; a ghost then continues
   the sleeping walk from there, stopped only by 1, 2 or 4.

G counts real particles stopping at the origin, W real-or-ghost stops at the
origin and R ghost-only stops, so G = W - R holds run by run.  R~ counts
independent plain walks, one from each initially empty site farther than K
from D, that reach the inner boundary for the first time at the origin.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from ..drift import drift_vector
from ..jumps import JumpDistribution
from ..rng import STREAM_GHOST, STREAM_INIT, STREAM_TAPE, STREAM_WALK, absorb, derive_seed, key2, \
    numpy_generator, to_unit
from .initial import InitialLaw

EPS = 1e-9
DEFAULT_G = 4.0


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class TrapezoidGeometry:
    L: int
    g: float
    K: int
    axis: tuple[float, float]

    def __post_init__(self):
        ax = tuple(float(a) for a in self.axis)
        object.__setattr__(self, "axis", ax)
        if len(ax) != 2:
            raise GeometryError("only d = 2 is supported: axis must have two components")
        if not self.L >= 1:
            raise GeometryError(f"L >= 1 violated (L = {self.L})")
        if not self.g > 0:
            raise GeometryError(f"g > 0 violated (g = {self.g})")
        if not self.K >= 1:
            raise GeometryError(f"K >= 1 violated (K = {self.K})")
        if abs(math.hypot(*ax) - 1.0) > 1e-9:
            raise GeometryError(f"|axis| = 1 violated (|axis| = {math.hypot(*ax)})")
        if not self.K < self.L:
            raise GeometryError(f"K < L violated (K = {self.K}, L = {self.L}): the origin is within K of D")
        reach = 2 * self.g * self.L / math.sqrt(1 + self.g ** 2)
        if not self.K < reach:
            raise GeometryError(f"K < 2gL/sqrt(1+g^2) violated (K = {self.K}, bound {reach:.6g}): "
                                "the origin is within K of E and G")
        if self.confinement_margin() > EPS:
            raise GeometryError("cone edges point out of the trapezoid through D, E or G")

    @property
    def e(self) -> np.ndarray:
        return np.array(self.axis)

    @property
    def e_perp(self) -> np.ndarray:
        return np.array([-self.axis[1], self.axis[0]])

    def uv(self, pts) -> tuple[np.ndarray, np.ndarray]:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return pts @ self.e, pts @ self.e_perp

    def confinement_margin(self) -> float:
        """max over cone edge directions and the outward normals of D, E, G of
        <edge, normal>; a value <= 0 means a path that stays in z + C_g can
        leave B_L only through F."""
        g = self.g
        edges = [np.array([1.0, g]), np.array([1.0, -g])]
        normals = [np.array([-1.0, 0.0]), np.array([-g, 1.0]), np.array([-g, -1.0])]
        return max(float(a @ n) for a in edges for n in normals)

    def in_trapezoid(self, pts) -> np.ndarray:
        u, v = self.uv(pts)
        return (u >= -self.L - EPS) & (u <= EPS) & (np.abs(v) <= self.g * (2 * self.L + u) + EPS)

    def in_cone(self, w) -> np.ndarray:
        u, v = self.uv(w)
        return (u >= -EPS) & (np.abs(v) <= self.g * u + EPS)

    def in_ball(self, w) -> np.ndarray:
        w = np.atleast_2d(np.asarray(w, dtype=float))
        return (w ** 2).sum(axis=1) < self.K ** 2

    def segments(self) -> dict[str, tuple[tuple[float, float], tuple[float, float]]]:
        """Sides in (u, v) coordinates."""
        L, g = self.L, self.g
        return {
            "D": ((-L, -g * L), (-L, g * L)),
            "E": ((-L, g * L), (0.0, 2 * g * L)),
            "G": ((-L, -g * L), (0.0, -2 * g * L)),
            "F": ((0.0, -2 * g * L), (0.0, 2 * g * L)),
        }

    def distance_to(self, pts, sides: str) -> np.ndarray:
        u, v = self.uv(pts)
        p = np.stack([u, v], axis=1)
        out = np.full(len(p), np.inf)
        for name in sides:
            a, b = (np.array(c) for c in self.segments()[name])
            ab = b - a
            t = np.clip(((p - a) @ ab) / (ab @ ab), 0.0, 1.0)
            out = np.minimum(out, np.linalg.norm(p - (a + t[:, None] * ab), axis=1))
        return out

    def bounding_box(self, margin: int) -> tuple[np.ndarray, np.ndarray]:
        corners = []
        for a, b in self.segments().values():
            for uu, vv in (a, b):
                corners.append(uu * self.e + vv * self.e_perp)
        c = np.array(corners)
        return np.floor(c.min(axis=0)).astype(int) - margin, np.ceil(c.max(axis=0)).astype(int) + margin


@dataclass
class _Layout:
    lo: np.ndarray
    shape: tuple[int, int]
    coords: np.ndarray
    inB: np.ndarray
    boundary0: np.ndarray  # inner boundary on the F side
    inner: np.ndarray  # full inner boundary
    movable: np.ndarray  # flat indices, in moving order
    far_from_D: np.ndarray  # flat indices with d(z, D) > K
    sites: np.ndarray  # flat indices of B_L, ascending
    origin: int


def _layout(geom: TrapezoidGeometry, p: JumpDistribution) -> _Layout:
    r = int(math.ceil(p.radius())) + 1
    lo, hi = geom.bounding_box(r)
    shape = (int(hi[0] - lo[0] + 1), int(hi[1] - lo[1] + 1))
    gx, gy = np.meshgrid(np.arange(lo[0], hi[0] + 1), np.arange(lo[1], hi[1] + 1), indexing="ij")
    coords = np.stack([gx.ravel(), gy.ravel()], axis=1).astype(np.int64)
    inB = geom.in_trapezoid(coords)
    offs = p.offset_array()
    bd0 = np.zeros(len(coords), dtype=np.bool_)
    inner = np.zeros(len(coords), dtype=np.bool_)
    for z in offs:
        tgt = coords + z
        u, _ = geom.uv(tgt)
        bd0 |= inB & (u > EPS)
        inner |= inB & ~geom.in_trapezoid(tgt)
    sites = np.flatnonzero(inB)
    pts = coords[sites]
    d_all = geom.distance_to(pts, "DEG")
    d_D = geom.distance_to(pts, "D")
    u, _ = geom.uv(pts)
    mov = sites[d_all > geom.K]
    umov = u[d_all > geom.K]
    order = np.lexsort((coords[mov, 1], coords[mov, 0], np.round(umov, 9)))
    origin = int((0 - lo[0]) * shape[1] + (0 - lo[1]))
    if not inB[origin]:
        raise GeometryError("origin must lie in B_L")
    return _Layout(lo, shape, coords, inB, bd0, inner, mov[order], sites[d_D > geom.K], sites, origin)


@njit(cache=True, inline="always")
def _cone(wx, wy, e0, e1, g):
    wu = wx * e0 + wy * e1
    wv = -wx * e1 + wy * e0
    return wu >= -1e-9 and abs(wv) <= g * wu + 1e-9


@njit(cache=True, inline="always")
def _ball(wx, wy, K):
    return wx * wx + wy * wy < K * K


@njit(cache=True, inline="always")
def _pick(cum, u):
    k = 0
    while k < cum.shape[0] - 1 and u >= cum[k]:
        k += 1
    return k


@njit(cache=True)
def _sleeping_walk(px, py, zx, zy, key, lo0, lo1, n0, n1, bd0, origin, e0, e1, g, K, s, offs, cum,
                   max_steps):
    """Walk with i.i.d. marks from (px, py), stopped by events 1, 2, 4.

    Returns 1 if it stops at the origin through event 4, 0 otherwise, and -1
    if ``max_steps`` ran out.
    """
    c = 0
    for _ in range(max_steps):
        wx = px - zx
        wy = py - zy
        incone = _cone(wx, wy, e0, e1, g)
        mark = to_unit(absorb(key, c)) < s
        c += 1
        if mark and ((not incone) or (wx == 0 and wy == 0)):
            return 0
        k = _pick(cum, to_unit(absorb(key, c)))
        c += 1
        px += offs[k, 0]
        py += offs[k, 1]
        wx = px - zx
        wy = py - zy
        if not (_cone(wx, wy, e0, e1, g) or _ball(wx, wy, K)):
            return 0
        ix = px - lo0
        iy = py - lo1
        if ix < 0 or iy < 0 or ix >= n0 or iy >= n1:
            return 0
        i = ix * n1 + iy
        if bd0[i]:
            return 1 if i == origin else 0
    return -1


@njit(cache=True)
def _trapezoid_kernel(eta0, coords, lo0, lo1, n0, n1, inB, bd0, inner, movable, far_D, origin,
                      e0, e1, g, K, s, offs, cum, tape_seed, ghost_seed, walk_seed, max_steps):
    n = eta0.shape[0]
    state = eta0.copy()
    cursor = np.zeros(n, np.int64)
    tape_key = key2(tape_seed, STREAM_TAPE)
    ghost_key = key2(ghost_seed, STREAM_GHOST)
    walk_key = key2(walk_seed, STREAM_WALK)
    G = 0
    W = 0
    R = 0
    ghosts = 0
    moved = 0
    violations = 0
    side_exits = 0
    unfinished = 0
    anomalies = 0
    for a in range(movable.shape[0]):
        z = movable[a]
        zx = coords[z, 0]
        zy = coords[z, 1]
        for _ in range(eta0[z]):
            if state[z] < 1:
                anomalies += 1
                break
            state[z] -= 1
            moved += 1
            if bd0[z]:
                state[z] += 1
                continue
            pos = z
            px = zx
            py = zy
            stop = -1  # flat index where the particle rests, -2 if it left the box
            sleep_stop = False
            ghost_from = -1
            for _step in range(max_steps):
                wx = px - zx
                wy = py - zy
                incone = _cone(wx, wy, e0, e1, g)
                if not (incone or _ball(wx, wy, K)):
                    violations += 1
                j = cursor[pos] + 1
                cursor[pos] = j
                h = absorb(absorb(absorb(tape_key, px), py), j)
                u = to_unit(h)
                if u < s:
                    if (not incone) or pos == z:
                        stop = pos
                        sleep_stop = True
                        break
                    continue
                k = _pick(cum, (u - s) / (1.0 - s))
                px += offs[k, 0]
                py += offs[k, 1]
                ix = px - lo0
                iy = py - lo1
                if ix < 0 or iy < 0 or ix >= n0 or iy >= n1:
                    side_exits += 1
                    stop = -2
                    break
                nxt = ix * n1 + iy
                wx = px - zx
                wy = py - zy
                cone_next = _cone(wx, wy, e0, e1, g)
                if not (cone_next or _ball(wx, wy, K)):
                    if not inB[nxt] and (px - 0) * e0 + (py - 0) * e1 <= 1e-9:
                        side_exits += 1
                    stop = nxt
                    break
                if bd0[nxt]:
                    stop = nxt
                    if nxt == origin:
                        G += 1
                        W += 1
                    break
                if state[nxt] == 0 and cone_next and nxt != z:
                    stop = nxt
                    ghost_from = nxt
                    break
                if state[nxt] == -1:
                    state[nxt] = 1
                pos = nxt
            else:
                unfinished += 1
                stop = pos
            if stop >= 0:
                if state[stop] == 0:
                    state[stop] = -1 if sleep_stop else 1
                elif state[stop] == -1:
                    state[stop] = 2
                else:
                    state[stop] += 1
            if ghost_from >= 0:
                gk = absorb(ghost_key, ghosts)
                ghosts += 1
                hit = _sleeping_walk(coords[ghost_from, 0], coords[ghost_from, 1], zx, zy, gk, lo0, lo1,
                                     n0, n1, bd0, origin, e0, e1, g, K, s, offs, cum, max_steps)
                if hit == 1:
                    W += 1
                    R += 1
                elif hit < 0:
                    unfinished += 1
    # oracle for E[W]: one independent sleeping walk per movable site
    s_hat = 0
    wk = absorb(walk_key, 1)
    for a in range(movable.shape[0]):
        z = movable[a]
        if bd0[z]:
            continue
        hit = _sleeping_walk(coords[z, 0], coords[z, 1], coords[z, 0], coords[z, 1], absorb(wk, z),
                             lo0, lo1, n0, n1, bd0, origin, e0, e1, g, K, s, offs, cum, max_steps)
        if hit == 1:
            s_hat += 1
        elif hit < 0:
            unfinished += 1
    # R~: plain walks from initially empty sites far from D
    r_tilde = 0
    wk2 = absorb(walk_key, 2)
    for a in range(far_D.shape[0]):
        z = far_D[a]
        if eta0[z] != 0:
            continue
        key = absorb(wk2, z)
        i = z
        px = coords[z, 0]
        py = coords[z, 1]
        done = inner[i]
        c = 0
        while not done and c < max_steps:
            k = _pick(cum, to_unit(absorb(key, c)))
            c += 1
            px += offs[k, 0]
            py += offs[k, 1]
            i = (px - lo0) * n1 + (py - lo1)
            done = inner[i]
        if not done:
            unfinished += 1
        elif i == origin:
            r_tilde += 1
    stats = np.array([G, W, R, r_tilde, s_hat, ghosts, moved, violations, side_exits, unfinished,
                      anomalies], np.int64)
    return stats, state


@dataclass(frozen=True)
class TrapezoidResult:
    G: int
    W: int
    R: int
    R_tilde: int
    S_hat: int  # sum over movable sites of one oracle indicator each
    ghosts: int
    moved: int
    particles: int
    movable_sites: int
    confinement_violations: int
    side_exits: int
    unfinished: int
    anomalies: int
    final_state: np.ndarray | None = field(default=None, repr=False, compare=False)

    def as_tuple(self) -> tuple[int, int, int, int]:
        return self.G, self.W, self.R, self.R_tilde


def _walk_stays(offs, cum, e0, e1, g, K, trials, horizon, seed):
    key = key2(seed, STREAM_WALK)
    stay = 0
    for i in range(trials):
        h = absorb(key, i)
        px = 0
        py = 0
        ok = True
        for t in range(horizon):
            k = _pick(cum, to_unit(absorb(h, t)))
            px += offs[k, 0]
            py += offs[k, 1]
            if not (_cone(px, py, e0, e1, g) or _ball(px, py, K)):
                ok = False
                break
        if ok:
            stay += 1
    return stay


_walk_stays = njit(cache=True)(_walk_stays)


def choose_K(p: JumpDistribution, g: float = DEFAULT_G, trials: int = 2000, horizon: int = 500,
             seed: int = 0, K_max: int = 64) -> int:
    """Smallest K with estimated P(walk stays in C_g union A_K for ``horizon`` steps) > 1/2.

    All K share the same pilot walks, so the estimate is monotone in K.
    """
    m = drift_vector(p)
    e = m / np.linalg.norm(m)
    offs, cum = p.offset_array(), p.cumulative()
    for K in range(1, K_max + 1):
        if _walk_stays(offs, cum, e[0], e[1], g, K, trials, horizon, np.int64(seed)) > trials / 2:
            return K
    raise GeometryError(f"no K <= {K_max} confines the walk with probability > 1/2")


def geometry_for(p: JumpDistribution, L: int, g: float = DEFAULT_G, K: int | None = None,
                 pilot_seed: int = 0) -> TrapezoidGeometry:
    m = drift_vector(p)
    e = m / np.linalg.norm(m)
    if K is None:
        K = choose_K(p, g, seed=pilot_seed)
    return TrapezoidGeometry(L, g, K, (float(e[0]), float(e[1])))


def trapezoid_stabilize(law: InitialLaw, lam: float, p: JumpDistribution, geom: TrapezoidGeometry,
                        seed: int, *, ghost_seed: int | None = None, max_steps: int = 10**7,
                        keep_state: bool = False) -> TrapezoidResult:
    """One run of the trapezoid construction.

    ``ghost_seed`` overrides the ghost stream (ghosts never touch the
    configuration, so the final state does not depend on it).
    """
    if p.dim != 2:
        raise GeometryError(f"trapezoid construction needs d = 2, got d = {p.dim}")
    m = drift_vector(p)
    e = m / np.linalg.norm(m)
    if not np.allclose(e, geom.e, atol=1e-9):
        raise GeometryError(f"axis parallel to the drift violated (axis {geom.axis}, drift {tuple(e)})")
    if not (lam >= 0 and math.isfinite(lam)):
        raise ValueError(f"lambda must be finite and >= 0, got {lam}")
    lay = _layout(geom, p)
    eta0 = np.zeros(len(lay.coords), dtype=np.int64)
    eta0[lay.sites] = law.draw(numpy_generator(seed, STREAM_INIT), len(lay.sites))
    s = lam / (1.0 + lam)
    gs = derive_seed(seed, STREAM_GHOST) if ghost_seed is None else ghost_seed
    stats, state = _trapezoid_kernel(
        eta0, lay.coords, np.int64(lay.lo[0]), np.int64(lay.lo[1]), np.int64(lay.shape[0]),
        np.int64(lay.shape[1]), lay.inB, lay.boundary0, lay.inner, lay.movable, lay.far_from_D,
        np.int64(lay.origin), float(geom.e[0]), float(geom.e[1]), float(geom.g), np.int64(geom.K), s,
        p.offset_array(), p.cumulative(), np.int64(seed), np.int64(gs),
        np.int64(derive_seed(seed, STREAM_WALK)), np.int64(max_steps))
    G, W, R, Rt, Sh, gh, mv, viol, side, unf, anom = (int(v) for v in stats)
    return TrapezoidResult(G, W, R, Rt, Sh, gh, mv, int(eta0.sum()), len(lay.movable), viol, side, unf, anom,
                           state if keep_state else None)
