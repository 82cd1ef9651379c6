"""Dynamic grid (spatial hash) with exact nearest-neighbor queries.

Points live in square cells of a uniform grid; a nearest query scans
cells in expanding Chebyshev rings around the query cell and stops once
the best distance found cannot be beaten by any unscanned ring.  This is
exact, not approximate: unscanned cells at ring k+1 are at least k cell
widths away from the query point.

The grid rebuilds itself when the live count drifts by 4x from the count
at the last rebuild, keeping roughly one point per cell so queries stay
O(1) across the e^t intensity sweep.  Single writer; queries are pure.
"""

from __future__ import annotations

import math

import numpy as np

from .windows import Window


class GridIndex:
    def __init__(self, window: Window, cell_size: float | None = None):
        self.window = window
        self._pos: dict[int, tuple[float, float]] = {}
        self._rebuild(cell_size)

    def __len__(self) -> int:
        return len(self._pos)

    def __contains__(self, pid: int) -> bool:
        return pid in self._pos

    def position(self, pid: int) -> tuple[float, float]:
        return self._pos[pid]

    def items(self):
        return self._pos.items()

    # -- mutation ---------------------------------------------------------

    def insert(self, pid: int, x: float, y: float) -> None:
        if pid in self._pos:
            raise ValueError(f"duplicate insert of id {pid}")
        self._pos[pid] = (x, y)
        self._cells.setdefault(self._cell_of(x, y), []).append(pid)
        if len(self._pos) > 4 * self._n_at_build:
            self._rebuild(None)

    def remove(self, pid: int) -> None:
        if pid not in self._pos:
            raise ValueError(f"remove of missing id {pid}")
        x, y = self._pos.pop(pid)
        key = self._cell_of(x, y)
        bucket = self._cells[key]
        bucket.remove(pid)
        if not bucket:
            del self._cells[key]
        if self._pos and 4 * len(self._pos) < self._n_at_build:
            self._rebuild(None)

    # -- queries ----------------------------------------------------------

    def nearest(self, q, exclude: int | None = None):
        """Exact nearest live point to q: (id, distance), or None if empty.

        Ties in distance break to the smallest id.  Distance follows the
        window topology (torus wraps).
        """
        if not self._pos or (len(self._pos) == 1 and exclude in self._pos):
            return None
        qx, qy = float(q[0]), float(q[1])
        cs = self._cell_size
        torus = self.window.is_torus
        w, h = self.window.width, self.window.height
        nx, ny = self._nx, self._ny
        cx = int((qx - self.window.x_min) / self._csx)
        cy = int((qy - self.window.y_min) / self._csy)
        if torus:
            cx %= nx
            cy %= ny
        else:
            cx = min(max(cx, 0), nx - 1)
            cy = min(max(cy, 0), ny - 1)

        best_d2 = math.inf
        best_id = -1
        max_ring = max(nx, ny)

        def scan(bucket):
            nonlocal best_d2, best_id
            for pid in bucket:
                if pid == exclude:
                    continue
                px, py = self._pos[pid]
                dx = px - qx
                dy = py - qy
                if torus:
                    dx -= w * round(dx / w)
                    dy -= h * round(dy / h)
                d2 = dx * dx + dy * dy
                if d2 < best_d2 or (d2 == best_d2 and pid < best_id):
                    best_d2 = d2
                    best_id = pid

        for k in range(max_ring + 1):
            if 2 * k + 1 > max(nx, ny):
                break
            for key in self._ring_cells(cx, cy, k):
                bucket = self._cells.get(key)
                if bucket:
                    scan(bucket)
            # Strict inequality: an unscanned cell is at distance >= k * cs,
            # so stopping here can never miss a tie that the smallest-id
            # rule would have resolved differently.
            if best_id >= 0 and best_d2 < (k * cs) ** 2:
                return best_id, math.sqrt(best_d2)
        # Ring exceeded the grid: finish with a full scan of occupied cells.
        for bucket in self._cells.values():
            scan(bucket)
        if best_id < 0:
            return None
        return best_id, math.sqrt(best_d2)

    # -- internals --------------------------------------------------------

    def _rebuild(self, cell_size: float | None) -> None:
        n = max(len(self._pos), 1)
        if cell_size is None:
            # ~1 expected point per cell.
            cell_size = math.sqrt(self.window.area / n)
        # Integer cell counts dividing the window exactly: a torus seam
        # with a partial cell would invalidate the ring-stop bound.
        self._nx = max(1, round(self.window.width / cell_size))
        self._ny = max(1, round(self.window.height / cell_size))
        self._csx = self.window.width / self._nx
        self._csy = self.window.height / self._ny
        self._cell_size = min(self._csx, self._csy)
        self._n_at_build = n
        self._cells = {}
        for pid, (x, y) in self._pos.items():
            self._cells.setdefault(self._cell_of(x, y), []).append(pid)

    def _cell_of(self, x: float, y: float) -> tuple[int, int]:
        ix = int((x - self.window.x_min) / self._csx)
        iy = int((y - self.window.y_min) / self._csy)
        if self.window.is_torus:
            ix %= self._nx
            iy %= self._ny
        else:
            ix = min(max(ix, 0), self._nx - 1)
            iy = min(max(iy, 0), self._ny - 1)
        return ix, iy

    def _ring_cells(self, cx: int, cy: int, k: int):
        nx, ny = self._nx, self._ny
        torus = self.window.is_torus
        if k == 0:
            yield cx, cy
            return
        for ix in range(cx - k, cx + k + 1):
            for iy in (cy - k, cy + k):
                if torus:
                    yield ix % nx, iy % ny
                elif 0 <= ix < nx and 0 <= iy < ny:
                    yield ix, iy
        for iy in range(cy - k + 1, cy + k):
            for ix in (cx - k, cx + k):
                if torus:
                    yield ix % nx, iy % ny
                elif 0 <= ix < nx and 0 <= iy < ny:
                    yield ix, iy


def brute_force_nearest(
    xy: np.ndarray, q, window: Window, ids: np.ndarray | None = None
):
    """Reference nearest-neighbor: full scan with the same tie rule."""
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    if len(xy) == 0:
        return None
    d = window.distances(xy, q)
    if ids is None:
        ids = np.arange(len(xy))
    best = np.lexsort((ids, d))[0]
    return int(ids[best]), float(d[best])
