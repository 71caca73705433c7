"""Product initial laws for the particle counts."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..engine import Configuration, _pt
from ..rng import STREAM_INIT, numpy_generator


@dataclass(frozen=True)
class InitialLaw:
    """I.i.d. per-site particle counts, every particle active.

    ``kind`` is ``"poisson"`` or ``"bernoulli"``; both have mean ``mu``.
    """

    kind: str
    mu: float

    def __post_init__(self):
        if self.kind not in ("poisson", "bernoulli"):
            raise ValueError(f"unknown initial law {self.kind!r}")
        if not (self.mu >= 0 and math.isfinite(self.mu)):
            raise ValueError(f"mu must be finite and >= 0, got {self.mu}")
        if self.kind == "bernoulli" and self.mu > 1:
            raise ValueError(f"Bernoulli law needs mu <= 1, got {self.mu}")

    @property
    def nu0(self) -> float:
        """Probability that a site starts empty."""
        return math.exp(-self.mu) if self.kind == "poisson" else 1.0 - self.mu

    def with_mu(self, mu: float) -> "InitialLaw":
        return InitialLaw(self.kind, mu)

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.mu == 0:
            return np.zeros(n, dtype=np.int64)
        if self.kind == "poisson":
            return rng.poisson(self.mu, n).astype(np.int64)
        return (rng.random(n) < self.mu).astype(np.int64)

    def describe(self) -> str:
        return f"{self.kind}({self.mu:g})"


def Poisson(mu: float) -> InitialLaw:
    return InitialLaw("poisson", mu)


def Bernoulli(mu: float) -> InitialLaw:
    return InitialLaw("bernoulli", mu)


def parse_law(text: str) -> InitialLaw:
    """``"poisson"`` / ``"bernoulli"`` names a family; ``"poisson(0.3)"`` a member."""
    t = text.strip().lower()
    if "(" in t:
        kind, rest = t.split("(", 1)
        return InitialLaw(kind.strip(), float(rest.rstrip(")")))
    return InitialLaw(t, 0.0)


def sample_initial(law: InitialLaw, region, seed: int) -> Configuration:
    """Draw a configuration on ``region`` (sites visited in sorted order)."""
    pts = sorted({_pt(x) for x in region})
    if not pts:
        raise ValueError("region must be non-empty")
    counts = law.draw(numpy_generator(seed, STREAM_INIT), len(pts))
    return Configuration.from_counts(len(pts[0]), {x: int(c) for x, c in zip(pts, counts) if c})
