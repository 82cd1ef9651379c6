"""Exact planar primitives: points, closed discs, and unions of discs.

A :class:`DiscUnion` is the growing "excluded region" of the backward
ancestor chain: a finite union of closed discs, kept in insertion order.
Diameters of such unions are exact (extremal pairs lie on disc boundaries
along the line of centers); areas are estimated by hit-or-miss Monte Carlo
because inclusion-exclusion over dozens of discs is exponential.
"""

from __future__ import annotations

import math
from typing import Iterable, NamedTuple

import numpy as np

from .rng import RngStream

# Absolute tolerance for exact geometric predicates.  Statistical
# comparisons elsewhere use multiples of a Monte Carlo standard error.
GEOM_TOL = 1e-9


class Point2(NamedTuple):
    x: float
    y: float


class Disc(NamedTuple):
    """Closed disc; points on the boundary count as contained."""

    center: Point2
    radius: float


def distance(a, b) -> float:
    """Euclidean distance between two points (any (x, y) pairs)."""
    return math.hypot(a[0] - b[0], a[1] - b[1])


class DiscUnion:
    """Finite union of closed discs, in insertion order.

    Immutable: growth happens through :meth:`with_disc`, which returns a
    new union.  Coordinates are mirrored into numpy arrays so membership
    tests vectorize.
    """

    __slots__ = ("centers", "radii")

    def __init__(self, discs: Iterable[Disc | tuple]):
        centers = []
        radii = []
        for d in discs:
            (cx, cy), r = d
            if not (math.isfinite(cx) and math.isfinite(cy) and math.isfinite(r)):
                raise ValueError("disc coordinates and radius must be finite")
            if r < 0:
                raise ValueError(f"negative radius {r}")
            centers.append((float(cx), float(cy)))
            radii.append(float(r))
        self.centers = np.asarray(centers, dtype=float).reshape(-1, 2)
        self.radii = np.asarray(radii, dtype=float)

    def __len__(self) -> int:
        return len(self.radii)

    def __iter__(self):
        for (cx, cy), r in zip(self.centers, self.radii):
            yield Disc(Point2(cx, cy), r)

    def with_disc(self, center, radius: float) -> "DiscUnion":
        if radius < 0:
            raise ValueError(f"negative radius {radius}")
        new = DiscUnion.__new__(DiscUnion)
        new.centers = np.vstack([self.centers, [[center[0], center[1]]]])
        new.radii = np.append(self.radii, float(radius))
        return new

    def contains(self, p) -> bool:
        """True iff p lies in some closed disc of the union."""
        if len(self) == 0:
            return False
        dx = self.centers[:, 0] - p[0]
        dy = self.centers[:, 1] - p[1]
        return bool(np.any(dx * dx + dy * dy <= self.radii**2 + GEOM_TOL))

    def contains_points(self, pts: np.ndarray) -> np.ndarray:
        """Vectorized membership for an (m, 2) array; returns (m,) bools."""
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        if len(self) == 0:
            return np.zeros(len(pts), dtype=bool)
        dx = pts[:, None, 0] - self.centers[None, :, 0]
        dy = pts[:, None, 1] - self.centers[None, :, 1]
        return np.any(dx * dx + dy * dy <= self.radii[None, :] ** 2 + GEOM_TOL, axis=1)

    def bounding_box(self) -> tuple[float, float, float, float]:
        """(x_min, x_max, y_min, y_max) of the union."""
        if len(self) == 0:
            raise ValueError("empty disc union has no bounding box")
        x_min = float(np.min(self.centers[:, 0] - self.radii))
        x_max = float(np.max(self.centers[:, 0] + self.radii))
        y_min = float(np.min(self.centers[:, 1] - self.radii))
        y_max = float(np.max(self.centers[:, 1] + self.radii))
        return x_min, x_max, y_min, y_max


def union_diameter(du: DiscUnion) -> float:
    """Exact diameter of a union of discs.

    The supremum distance is attained either across one disc (2r) or
    between boundary points of two discs along their line of centers
    (||c_i - c_j|| + r_i + r_j), so a pairwise pass is exact.
    """
    n = len(du)
    if n == 0:
        raise ValueError("empty disc union has no diameter")
    best = float(2.0 * np.max(du.radii))
    if n > 1:
        diff = du.centers[:, None, :] - du.centers[None, :, :]
        dist = np.sqrt(np.sum(diff * diff, axis=2))
        pair = dist + du.radii[:, None] + du.radii[None, :]
        np.fill_diagonal(pair, 0.0)
        best = max(best, float(np.max(pair)))
    return best


def union_area_mc(
    du: DiscUnion, n_samples: int, rng: RngStream
) -> tuple[float, float]:
    """Hit-or-miss Monte Carlo area of a disc union over its bounding box.

    Returns (estimate, standard_error); the estimate is unbiased and the
    SE is the binomial standard error scaled by the box area.
    """
    if len(du) == 0:
        raise ValueError("empty disc union has no area")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    x_min, x_max, y_min, y_max = du.bounding_box()
    box_area = (x_max - x_min) * (y_max - y_min)
    if box_area == 0.0:  # all discs degenerate
        return 0.0, 0.0
    pts = np.empty((n_samples, 2))
    pts[:, 0] = rng.uniform(x_min, x_max, n_samples)
    pts[:, 1] = rng.uniform(y_min, y_max, n_samples)
    p_hat = float(np.mean(du.contains_points(pts)))
    se = box_area * math.sqrt(p_hat * (1.0 - p_hat) / n_samples)
    return box_area * p_hat, se


def isodiametric_holds(
    du: DiscUnion, area: float, area_se: float = 0.0, sigmas: float = 3.0
) -> bool:
    """Check area <= (pi/4) * diameter^2 within tolerance.

    Tolerance is ``sigmas`` standard errors when the area came from Monte
    Carlo, and the fixed geometric tolerance when it is exact.  Single
    discs attain the inequality with equality, so mass fuzzing over
    nested unions wants the wider end of the 3-4 sigma range.
    """
    tol = sigmas * area_se if area_se > 0.0 else GEOM_TOL
    d = union_diameter(du)
    return area <= 0.25 * math.pi * d * d + tol


def merged_diameter_bound(diam_c: float, area_c: float, area_merged: float) -> float:
    """Upper bound on diam(C u D) for a disc D centered inside C.

    Valid for any compact C and closed disc D with center in C:
    max(diam(C) + sqrt(2 (area(C u D) - area(C)) / pi),
        sqrt(4 area(C u D) / pi)).
    """
    if diam_c < 0 or area_c < 0:
        raise ValueError("diameter and area must be nonnegative")
    if area_merged < area_c:
        raise ValueError(
            f"merged area {area_merged} smaller than base area {area_c}"
        )
    grown = diam_c + math.sqrt(2.0 * (area_merged - area_c) / math.pi)
    full = math.sqrt(4.0 * area_merged / math.pi)
    return max(grown, full)


def random_disc_union(
    n_discs: int,
    rng: RngStream,
    center_scale: float = 2.0,
    radius_scale: float = 1.0,
    chained: bool = False,
) -> DiscUnion:
    """Random disc union for property fuzzing.

    With ``chained=True`` each disc is centered on the boundary of the
    previous one, mimicking how the ancestor chain grows its region.
    """
    if n_discs < 1:
        raise ValueError("need at least one disc")
    discs = [Disc(Point2(0.0, 0.0), float(rng.exponential(radius_scale)))]
    for _ in range(n_discs - 1):
        if chained:
            prev_c, prev_r = discs[-1].center, discs[-1].radius
            ang = float(rng.uniform(0.0, 2.0 * math.pi))
            cx = prev_c.x + prev_r * math.cos(ang)
            cy = prev_c.y + prev_r * math.sin(ang)
        else:
            cx, cy = (float(v) for v in rng.uniform(-center_scale, center_scale, 2))
        discs.append(Disc(Point2(cx, cy), float(rng.exponential(radius_scale))))
    return DiscUnion(discs)
