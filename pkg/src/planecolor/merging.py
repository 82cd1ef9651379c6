"""Reversed-time coalescing partition dynamics.

Running the clock backwards, every particle dies at rate 1 and its cell
is absorbed by the nearest surviving particle's cell.  Cells are tracked
as weights (raster pixel counts), which is all the dynamics need; an
optional union-find over the original raster labels supports relabeled
snapshots.  Deletion clocks are drawn upfront and processed through a
time-ordered queue, so there is no time discretization.

Weights initialized from a raster are integer pixel counts, so the
conservation checks are exact; ``weight_unit`` converts to area.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .forest import Forest
from .grid import GridIndex
from .raster import PartitionRaster
from .rng import RngStream
from .windows import Window


@dataclass(frozen=True)
class MergeEvent:
    time: float
    deleted: int
    absorber: int
    area: float  # transferred cell area (weight x weight_unit)


class CellMap:
    """Live particles with cell weights; single trajectory, single writer."""

    def __init__(
        self,
        window: Window,
        ids: np.ndarray,
        positions: np.ndarray,
        weights: np.ndarray,
        weight_unit: float = 1.0,
    ):
        ids = np.asarray(ids, dtype=np.int64)
        positions = np.asarray(positions, dtype=float).reshape(-1, 2)
        weights = np.asarray(weights, dtype=float).reshape(-1)
        if not (len(ids) == len(positions) == len(weights)):
            raise ValueError("ids, positions and weights must align")
        if len(ids) == 0:
            raise ValueError("cell map needs at least one live particle")
        self.window = window
        self.weight_unit = float(weight_unit)
        self.positions = {
            int(i): (float(x), float(y)) for i, (x, y) in zip(ids, positions)
        }
        self.weights = {int(i): float(w) for i, w in zip(ids, weights)}
        self._index = GridIndex(window)
        for i, (x, y) in self.positions.items():
            self._index.insert(i, x, y)
        # Union-find over original labels, for raster relabeling.
        self._owner = {int(i): int(i) for i in ids}

    @property
    def live_ids(self) -> list[int]:
        return sorted(self.weights)

    @property
    def live_count(self) -> int:
        return len(self.weights)

    @property
    def total_weight(self) -> float:
        return float(sum(self.weights.values()))

    @property
    def total_area(self) -> float:
        return self.total_weight * self.weight_unit

    def area_of(self, pid: int) -> float:
        return self.weights[pid] * self.weight_unit

    def owner_of(self, original_label: int) -> int:
        """Current absorbing cell of an original label (path compression)."""
        root = original_label
        while self._owner[root] != root:
            root = self._owner[root]
        while self._owner[original_label] != root:
            self._owner[original_label], original_label = (
                root,
                self._owner[original_label],
            )
        return root

    def relabel(self, raster: PartitionRaster) -> np.ndarray:
        """Map a raster's original labels to their current owners."""
        uniq, inv = np.unique(raster.labels, return_inverse=True)
        owners = np.array([self.owner_of(int(l)) for l in uniq], dtype=np.int64)
        return owners[inv].reshape(raster.labels.shape)

    def merge_step(self, deleted: int, time: float = math.nan) -> MergeEvent:
        """Delete a particle and hand its cell to the nearest survivor.

        Ties in survivor distance break to the smallest id.
        """
        if deleted not in self.weights:
            raise ValueError(f"particle {deleted} is not live")
        if self.live_count < 2:
            raise ValueError("cannot delete the last live particle")
        x, y = self.positions[deleted]
        self._index.remove(deleted)
        absorber, _ = self._index.nearest((x, y))
        moved = self.weights.pop(deleted)
        self.weights[absorber] += moved
        del self.positions[deleted]
        self._owner[deleted] = absorber
        return MergeEvent(
            time=time,
            deleted=deleted,
            absorber=absorber,
            area=moved * self.weight_unit,
        )


def init_cells(f: Forest, t1: float, raster: PartitionRaster) -> CellMap:
    """Cells of the time-t1 roots, weighted by raster pixel counts.

    ``weight_unit`` is the pixel area, so cell areas are count x pixel
    area and the weights themselves stay integral.
    """
    counts = raster.label_pixel_counts()
    anc = f.ancestors_at(t1)
    roots = np.unique(anc[f.t <= t1])
    root_set = set(int(r) for r in roots)
    if not set(counts).issubset(root_set):
        raise ValueError("raster labels are not a subset of the time-t1 roots")
    px_area = (raster.window.width / raster.resolution) * (
        raster.window.height / raster.resolution
    )
    ids = np.asarray(sorted(root_set), dtype=np.int64)
    weights = np.array([float(counts.get(int(i), 0)) for i in ids])
    return CellMap(f.window, ids, f.xy[ids], weights, weight_unit=px_area)


def merge_step(cells: CellMap, deleted: int, time: float = math.nan) -> MergeEvent:
    return cells.merge_step(deleted, time)


def reverse_run(
    cells: CellMap, t_from: float, t_to: float, rng: RngStream
) -> tuple[CellMap, list[MergeEvent]]:
    """Run the coalescing dynamics from t_from down to t_to.

    Every live particle gets an independent Exp(1) deletion clock run
    downward from t_from; deletions after t_to are applied in decreasing
    time order, each merging the deleted cell into its nearest survivor.
    Stops early when a single cell remains.
    """
    if not t_to < t_from:
        raise ValueError("need t_to < t_from (time runs downward)")
    ids = cells.live_ids
    death = t_from - rng.exponential(1.0, len(ids))
    order = np.argsort(-death, kind="stable")
    events: list[MergeEvent] = []
    for j in order:
        t = float(death[j])
        if t <= t_to:
            break
        if cells.live_count == 1:
            break
        events.append(cells.merge_step(int(ids[j]), time=t))
    return cells, events


def snapshot_labels(
    raster: PartitionRaster, events: list[MergeEvent], at_time: float
) -> np.ndarray:
    """Raster labels as they stood at ``at_time`` during a reversed run.

    Replays the merges that happened after ``at_time`` (times above it,
    since the clock runs downward) onto the original labels.
    """
    owner: dict[int, int] = {}

    def find(label: int) -> int:
        root = label
        while owner.get(root, root) != root:
            root = owner[root]
        while owner.get(label, label) != root:
            owner[label], label = root, owner[label]
        return root

    for ev in events:
        if ev.time > at_time:
            owner[ev.deleted] = ev.absorber
    uniq, inv = np.unique(raster.labels, return_inverse=True)
    mapped = np.array([find(int(l)) for l in uniq], dtype=np.int64)
    return mapped[inv].reshape(raster.labels.shape)


def cell_area_profile(cells: CellMap) -> list[tuple[int, float]]:
    """(id, area fraction) sorted by descending fraction; fractions sum to 1."""
    total = cells.total_weight
    rows = [(i, w / total) for i, w in cells.weights.items()]
    rows.sort(key=lambda r: (-r[1], r[0]))
    return rows
