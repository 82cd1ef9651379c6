"""Finite simulation windows standing in for the infinite plane.

Torus topology is the default: it removes the boundary effects that the
infinite-plane theory ignores.  Plane topology (no wrap) is kept for the
elementary coloring model on the unit square.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PLANE = "plane"
TORUS = "torus"


@dataclass(frozen=True)
class Window:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    topology: str = TORUS

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("window must have positive extent")
        if self.topology not in (PLANE, TORUS):
            raise ValueError(f"unknown topology {self.topology!r}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def is_torus(self) -> bool:
        return self.topology == TORUS

    def contains(self, p) -> bool:
        return self.x_min <= p[0] <= self.x_max and self.y_min <= p[1] <= self.y_max

    def distance(self, a, b) -> float:
        """Shortest distance between two points under the window topology."""
        dx = a[0] - b[0]
        dy = a[1] - b[1]
        if self.is_torus:
            w, h = self.width, self.height
            dx -= w * round(dx / w)
            dy -= h * round(dy / h)
        # sqrt of the explicit dot product, matching the grid index and the
        # vectorized path bit for bit.
        return math.sqrt(dx * dx + dy * dy)

    def distances(self, pts: np.ndarray, q) -> np.ndarray:
        """Vectorized distance from each row of (m, 2) ``pts`` to ``q``."""
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        dx = pts[:, 0] - q[0]
        dy = pts[:, 1] - q[1]
        if self.is_torus:
            w, h = self.width, self.height
            dx -= w * np.round(dx / w)
            dy -= h * np.round(dy / h)
        return np.sqrt(dx * dx + dy * dy)


def unit_torus() -> Window:
    return Window(0.0, 1.0, 0.0, 1.0, TORUS)


def unit_square() -> Window:
    return Window(0.0, 1.0, 0.0, 1.0, PLANE)
