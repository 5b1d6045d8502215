"""Gauss-Legendre rules on intervals and rectangles."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def _reference_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(n)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_legendre(n: int, a: float = -0.5, b: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the ``n``-point rule on ``[a, b]``."""
    if n < 1:
        raise ValueError("need at least one quadrature node")
    x, w = _reference_rule(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


@dataclass(frozen=True)
class Rect:
    """Axis-aligned parameter rectangle ``[x1_min, x1_max] x [x2_min, x2_max]``."""

    x1_min: float = -0.5
    x1_max: float = 0.5
    x2_min: float = -0.5
    x2_max: float = 0.5

    def __post_init__(self):
        values = (self.x1_min, self.x1_max, self.x2_min, self.x2_max)
        if not all(np.isfinite(v) for v in values):
            raise ValueError("rectangle bounds must be finite")
        if not (self.x1_max > self.x1_min and self.x2_max > self.x2_min):
            raise ValueError("rectangle is degenerate")

    @classmethod
    def parse(cls, text: str) -> "Rect":
        """Parse ``"a1,b1,a2,b2"``."""
        parts = [float(p) for p in text.split(",")]
        if len(parts) != 4:
            raise ValueError("domain needs four comma-separated numbers a1,b1,a2,b2")
        return cls(*parts)

    @property
    def area(self) -> float:
        return (self.x1_max - self.x1_min) * (self.x2_max - self.x2_min)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1_min, self.x1_max, self.x2_min, self.x2_max)

    def gauss(self, n1: int, n2: int | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Tensor-product rule: flattened ``x1``, ``x2`` and weights (summing to the area)."""
        n2 = n1 if n2 is None else n2
        x1, w1 = gauss_legendre(n1, self.x1_min, self.x1_max)
        x2, w2 = gauss_legendre(n2, self.x2_min, self.x2_max)
        g1, g2 = np.meshgrid(x1, x2, indexing="ij")
        return g1.ravel(), g2.ravel(), np.outer(w1, w2).ravel()

    def grid(self, n1: int, n2: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Equispaced ``(n1, n2)`` grid including the boundary."""
        n2 = n1 if n2 is None else n2
        x1 = np.linspace(self.x1_min, self.x1_max, n1)
        x2 = np.linspace(self.x2_min, self.x2_max, n2)
        return np.meshgrid(x1, x2, indexing="ij")
