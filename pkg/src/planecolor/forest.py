"""Nearest-neighbor genealogical forests and their empirical measures.

Each arriving particle attaches to the nearest particle already present;
iterating parent links gives the ancestor at any earlier time, and the
descendant sets of the time-t1 particles partition every later
generation.  Normalized empirical measures on those descendant sets are
the objects whose convergence the toolkit probes.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .grid import GridIndex
from .rng import RngStream
from .sampling import sample_ppp, sample_spacetime_ppp, reverse_lifetimes
from .windows import PLANE, Window


@dataclass
class DiscreteMeasure:
    """Finite weighted point measure: positions (k, 2), weights (k,)."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        self.weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if len(self.points) != len(self.weights):
            raise ValueError("points and weights length mismatch")
        if np.any(self.weights < 0):
            raise ValueError("weights must be nonnegative")

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))


class Particle(NamedTuple):
    id: int
    t: float
    z: tuple[float, float]
    parent: int | None  # None for roots


@dataclass
class Forest:
    """Genealogical forest, particles indexed 0..n-1 in birth order.

    Stored as arrays (struct-of-arrays); ``particle(i)`` materializes one
    record.  ``parent[i] == -1`` marks a root.  ``root[i]`` caches each
    particle's root-generation ancestor; ``color[i]`` is the inherited
    color label (root id unless explicit seed colors were given).
    """

    window: Window
    t: np.ndarray
    xy: np.ndarray
    parent: np.ndarray
    root: np.ndarray
    color: np.ndarray
    n_roots: int
    root_time: float

    def __len__(self) -> int:
        return len(self.t)

    def particle(self, i: int) -> Particle:
        p = int(self.parent[i])
        return Particle(
            id=int(i),
            t=float(self.t[i]),
            z=(float(self.xy[i, 0]), float(self.xy[i, 1])),
            parent=None if p < 0 else p,
        )

    def ancestor(self, t: float, pid: int) -> int:
        """Ancestor of particle ``pid`` alive at time ``t``.

        Walks parent links until the birth time drops to <= t; a particle
        is its own ancestor at any time >= its birth.  Walking past the
        root generation returns the root.
        """
        i = int(pid)
        if not 0 <= i < len(self.t):
            raise ValueError(f"unknown particle id {pid}")
        while self.t[i] > t and self.parent[i] >= 0:
            i = int(self.parent[i])
        return i

    def ancestors_at(self, t1: float) -> np.ndarray:
        """Ancestor-at-t1 for every particle in one forward pass.

        Parents precede children in index order, so resolving ids in
        ascending order collapses whole chains.
        """
        n = len(self.t)
        anc = list(range(n))
        t = self.t.tolist()
        parent = self.parent.tolist()
        for i in range(n):
            p = parent[i]
            if p >= 0 and t[i] > t1:
                anc[i] = anc[p]
        return np.asarray(anc, dtype=np.int64)

    def descend(self, t1: float, t2: float, root_id: int) -> np.ndarray:
        """Ids born up to t2 whose time-t1 ancestor is ``root_id``."""
        if t1 > t2:
            raise ValueError(f"need t1 <= t2, got {t1} > {t2}")
        if self.t[root_id] > t1:
            raise ValueError(f"particle {root_id} not alive at time {t1}")
        anc = self.ancestors_at(t1)
        mask = (anc == root_id) & (self.t <= t2)
        return np.flatnonzero(mask)

    def empirical_measure(self, t1: float, t2: float, root_id: int) -> DiscreteMeasure:
        """Weight e^{-t2} on the position of each time-t1 descendant."""
        ids = self.descend(t1, t2, root_id)
        w = math.exp(-t2)
        return DiscreteMeasure(self.xy[ids], np.full(len(ids), w))

    def alive_ids(self, t: float) -> np.ndarray:
        return np.flatnonzero(self.t <= t)

    def prefix(self, m: int) -> "Forest":
        """The forest restricted to the first m particles (birth order).

        Valid because parents always precede children in index order.
        """
        if not self.n_roots <= m <= len(self.t):
            raise ValueError(f"prefix size {m} outside [{self.n_roots}, {len(self.t)}]")
        return Forest(
            window=self.window,
            t=self.t[:m],
            xy=self.xy[:m],
            parent=self.parent[:m],
            root=self.root[:m],
            color=self.color[:m],
            n_roots=self.n_roots,
            root_time=self.root_time,
        )

    def ancestor_displacement_samples(self, t: float, t0: float) -> np.ndarray:
        """Distances from each particle alive at t to its time-t0 ancestor."""
        if t0 > t:
            raise ValueError(f"need t0 <= t, got {t0} > {t}")
        anc = self.ancestors_at(t0)
        ids = self.alive_ids(t)
        dx = self.xy[ids, 0] - self.xy[anc[ids], 0]
        dy = self.xy[ids, 1] - self.xy[anc[ids], 1]
        if self.window.is_torus:
            w, h = self.window.width, self.window.height
            dx -= w * np.round(dx / w)
            dy -= h * np.round(dy / h)
        return np.hypot(dx, dy)

    def to_csv(self, path, metadata: str | None = None) -> None:
        """Write ``id,t,x,y,parent`` rows (parent empty for roots)."""
        with open(path, "w", encoding="utf-8") as fh:
            if metadata:
                fh.write(f"# {metadata}\n")
            fh.write("id,t,x,y,parent\n")
            for i in range(len(self.t)):
                p = "" if self.parent[i] < 0 else str(int(self.parent[i]))
                fh.write(
                    f"{i},{self.t[i]!r},{self.xy[i, 0]!r},{self.xy[i, 1]!r},{p}\n"
                )


def grow_elementary(
    seeds: list[tuple[tuple[float, float], int]],
    n: int,
    w: Window,
    rng: RngStream,
) -> Forest:
    """Elementary coloring model: k seeds, then n-k uniform arrivals.

    Each arrival takes the color of the closest point already present.
    Birth times are the arrival indices (0..k-1 for the seeds), which
    preserves the parent-precedes-child ordering without a clock.
    """
    k = len(seeds)
    if k < 2:
        raise ValueError("need at least 2 seeds")
    if len({(x, y) for (x, y), _ in seeds}) != k:
        raise ValueError("seed positions must be distinct")
    if n < k:
        raise ValueError(f"n={n} smaller than the number of seeds {k}")
    if w.topology != PLANE:
        raise ValueError("elementary model runs in a plane window")

    xy = np.empty((n, 2))
    for i, ((x, y), _) in enumerate(seeds):
        xy[i] = (x, y)
    xy[k:, 0] = rng.uniform(w.x_min, w.x_max, n - k)
    xy[k:, 1] = rng.uniform(w.y_min, w.y_max, n - k)
    t = np.arange(n, dtype=float)
    colors = np.empty(n, dtype=np.int64)
    colors[:k] = [c for _, c in seeds]
    return _attach(w, t, xy, colors, n_roots=k, root_time=float(k - 1))


def grow_spacetime(
    t1: float,
    t2: float,
    w: Window,
    rng: RngStream,
    reverse_root_times: bool = False,
) -> Forest:
    """Space-time coloring forest on (t1, t2].

    Roots are the particles already present at t1 (a spatial Poisson
    process of intensity e^{t1}); arrivals on (t1, t2] attach to the
    nearest particle alive at their birth instant.  Root birth times are
    t1 unless ``reverse_root_times`` draws them as t1 - Exp(1), which a
    reversed-time experiment needs.
    """
    if not t1 <= t2:
        raise ValueError(f"need t1 <= t2, got {t1} > {t2}")
    if math.exp(t1) * w.area < 2:
        warnings.warn(
            "expected initial count below 2: coloring is degenerate",
            stacklevel=2,
        )
    roots = sample_ppp(math.exp(t1), w, rng)
    if reverse_root_times:
        root_t, _ = reverse_lifetimes(roots, t1, rng)
        order = np.argsort(root_t, kind="stable")
        root_t, roots = root_t[order], roots[order]
    else:
        root_t = np.full(len(roots), t1)
    if t2 > t1:
        arr_t, arr_xy = sample_spacetime_ppp(t1, t2, w, rng)
    else:
        arr_t = np.empty(0)
        arr_xy = np.empty((0, 2))
    t = np.concatenate([root_t, arr_t])
    xy = np.vstack([roots, arr_xy])
    colors = np.arange(len(t), dtype=np.int64)  # spacetime colors = root ids
    return _attach(w, t, xy, colors, n_roots=len(roots), root_time=t1)


def _attach(
    w: Window,
    t: np.ndarray,
    xy: np.ndarray,
    colors: np.ndarray,
    n_roots: int,
    root_time: float,
) -> Forest:
    """Parent every non-root to the nearest strictly earlier particle."""
    n = len(t)
    if n_roots == 0 and n > 0:
        raise ValueError("cannot attach arrivals to an empty root generation")
    parent = np.full(n, -1, dtype=np.int64)
    root = np.arange(n, dtype=np.int64)
    idx = GridIndex(w)
    xs = xy[:, 0].tolist()
    ys = xy[:, 1].tolist()
    for i in range(n_roots):
        idx.insert(i, xs[i], ys[i])
    for i in range(n_roots, n):
        hit = idx.nearest((xs[i], ys[i]))
        p = hit[0]
        parent[i] = p
        root[i] = root[p]
        colors[i] = colors[p]
        idx.insert(i, xs[i], ys[i])
    return Forest(
        window=w,
        t=np.asarray(t, dtype=float),
        xy=np.asarray(xy, dtype=float),
        parent=parent,
        root=root,
        color=np.asarray(colors, dtype=np.int64),
        n_roots=n_roots,
        root_time=root_time,
    )
