"""Finite-support jump distributions on Z^d."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


class ZeroDrift(ValueError):
    """The jump distribution has null expected jump."""


@dataclass(frozen=True)
class JumpDistribution:
    """Jump law p(.) given as a list of (offset, probability) pairs."""

    offsets: tuple[tuple[int, ...], ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        if not self.offsets:
            raise ValueError("jump distribution needs a non-empty support")
        if len(self.offsets) != len(self.probs):
            raise ValueError("offsets and probabilities differ in length")
        dims = {len(z) for z in self.offsets}
        if len(dims) != 1 or 0 in dims:
            raise ValueError("all offsets must share one positive dimension")
        if len(set(self.offsets)) != len(self.offsets):
            raise ValueError("offsets must be distinct")
        if any(p <= 0 for p in self.probs):
            raise ValueError("probabilities must be positive")
        if abs(sum(self.probs) - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {sum(self.probs)!r}, not 1")

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[Sequence[int] | int, float]]):
        offs, ps = [], []
        for z, p in pairs:
            z = (int(z),) if np.isscalar(z) else tuple(int(c) for c in z)
            offs.append(z)
            ps.append(float(p))
        return cls(tuple(offs), tuple(ps))

    @property
    def dim(self) -> int:
        return len(self.offsets[0])

    def offset_array(self) -> np.ndarray:
        return np.array(self.offsets, dtype=np.int64)

    def cumulative(self) -> np.ndarray:
        c = np.cumsum(np.array(self.probs, dtype=np.float64))
        c[-1] = 1.0
        return c

    def radius(self) -> int:
        """Largest coordinate magnitude of any jump."""
        return int(np.abs(self.offset_array()).max())

    def drift(self) -> np.ndarray:
        return (self.offset_array() * np.array(self.probs)[:, None]).sum(axis=0)

    def describe(self) -> str:
        parts = []
        for z, p in zip(self.offsets, self.probs):
            parts.append(f"{':'.join(str(c) for c in z)}@{p:.12g}")
        return ";".join(parts)


def nearest_neighbour_1d(q: float) -> JumpDistribution:
    """p(+1) = q, p(-1) = 1 - q; degenerate endpoints keep a single jump."""
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    pairs = [((1,), q), ((-1,), 1.0 - q)]
    return JumpDistribution.from_pairs([pz for pz in pairs if pz[1] > 0])


def nearest_neighbour_2d(right: float, left: float, up: float, down: float) -> JumpDistribution:
    pairs = [((1, 0), right), ((-1, 0), left), ((0, 1), up), ((0, -1), down)]
    return JumpDistribution.from_pairs([pz for pz in pairs if pz[1] > 0])


def parse_jumps(text: str) -> JumpDistribution:
    """Parse ``"1@0.7;-1@0.3"`` or ``"1:0@0.5;0:1@0.5"``."""
    pairs = []
    for item in text.split(";"):
        item = item.strip()
        if not item:
            continue
        off, _, p = item.partition("@")
        if not p:
            raise ValueError(f"bad jump entry {item!r}; expected offset@prob")
        pairs.append((tuple(int(c) for c in off.split(":")), float(p)))
    return JumpDistribution.from_pairs(pairs)
