"""Rasterized colored partitions and their boundary statistics.

The limit partition is approximated by Voronoi labeling: each pixel
center takes the time-t1 ancestor of its nearest particle.  Resolution
is the convergence knob; no test may assume pixel-level identity across
resolutions, since the limit regions are only defined up to null sets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .forest import Forest
from .windows import Window


@dataclass
class PartitionRaster:
    window: Window
    resolution: int
    labels: np.ndarray  # (res, res) int64, [iy, ix], iy grows with y

    def __post_init__(self):
        if self.labels.shape != (self.resolution, self.resolution):
            raise ValueError("label grid does not match resolution")

    @property
    def pixel_size(self) -> float:
        return self.window.width / self.resolution

    def label_areas(self) -> dict[int, float]:
        """Area per label; entries sum to the window area exactly."""
        px_area = (self.window.width / self.resolution) * (
            self.window.height / self.resolution
        )
        labels, counts = np.unique(self.labels, return_counts=True)
        return {int(l): float(c) * px_area for l, c in zip(labels, counts)}

    def label_pixel_counts(self) -> dict[int, int]:
        labels, counts = np.unique(self.labels, return_counts=True)
        return {int(l): int(c) for l, c in zip(labels, counts)}


def rasterize_voronoi(f: Forest, t1: float, resolution: int) -> PartitionRaster:
    """Label each pixel center by the time-t1 ancestor of its nearest particle."""
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    if len(f) == 0:
        raise ValueError("cannot rasterize an empty forest")
    w = f.window
    anc = f.ancestors_at(t1)
    xs = w.x_min + (np.arange(resolution) + 0.5) * w.width / resolution
    ys = w.y_min + (np.arange(resolution) + 0.5) * w.height / resolution
    gx, gy = np.meshgrid(xs, ys)  # gy rows vary with iy
    q = np.column_stack([gx.ravel(), gy.ravel()])
    pts = f.xy - [w.x_min, w.y_min]
    if w.is_torus:
        size = np.array([w.width, w.height])
        tree = cKDTree(np.mod(pts, size), boxsize=size)
        _, ni = tree.query(np.mod(q - [w.x_min, w.y_min], size))
    else:
        tree = cKDTree(pts)
        _, ni = tree.query(q - [w.x_min, w.y_min])
    labels = anc[ni].reshape(resolution, resolution)
    return PartitionRaster(window=w, resolution=resolution, labels=labels)


def boundary_length(r: PartitionRaster) -> float:
    """Total label-boundary length: differing 4-neighbor pairs x edge length.

    A horizontally adjacent differing pair contributes one vertical pixel
    edge and vice versa; wrap-around pairs are not counted.
    """
    lab = r.labels
    horizontal = np.count_nonzero(lab[:, 1:] != lab[:, :-1])
    vertical = np.count_nonzero(lab[1:, :] != lab[:-1, :])
    return horizontal * (r.window.height / r.resolution) + vertical * (
        r.window.width / r.resolution
    )


def boundary_mask(r) -> np.ndarray:
    """Pixels adjacent (4-neighborhood) to a differently labeled pixel.

    Accepts a PartitionRaster or a bare 2-d label array.
    """
    lab = r.labels if isinstance(r, PartitionRaster) else np.asarray(r)
    mask = np.zeros(lab.shape, dtype=bool)
    dh = lab[:, 1:] != lab[:, :-1]
    dv = lab[1:, :] != lab[:-1, :]
    mask[:, 1:] |= dh
    mask[:, :-1] |= dh
    mask[1:, :] |= dv
    mask[:-1, :] |= dv
    return mask


def label_color(label: int) -> tuple[int, int, int]:
    """Fixed 24-bit color per label via a splitmix hash of the label id."""
    x = (int(label) + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    x ^= x >> 31
    return (x & 0xFF, (x >> 8) & 0xFF, (x >> 16) & 0xFF)


def labels_to_rgb(labels: np.ndarray) -> np.ndarray:
    """(h, w) labels -> (h, w, 3) uint8 colors, one fixed color per label."""
    uniq, inv = np.unique(labels, return_inverse=True)
    palette = np.array([label_color(l) for l in uniq], dtype=np.uint8)
    return palette[inv].reshape(*labels.shape, 3)


def write_ppm(r: PartitionRaster, path) -> None:
    """Binary PPM (P6); rows flipped so increasing y points up in the image."""
    rgb = labels_to_rgb(r.labels)[::-1]
    h, w, _ = rgb.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(rgb.tobytes())


def read_ppm(path) -> np.ndarray:
    """Read a binary PPM back as (h, w, 3) uint8 (as written by write_ppm)."""
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P6":
        raise ValueError("not a binary PPM (P6) file")
    w, h = (int(v) for v in parts[1].split())
    maxval = int(parts[2])
    if maxval != 255:
        raise ValueError("only 8-bit PPM supported")
    pixels = np.frombuffer(parts[3][: w * h * 3], dtype=np.uint8)
    return pixels.reshape(h, w, 3)


def rgb_to_labels(rgb: np.ndarray) -> np.ndarray:
    """Collapse distinct colors back to arbitrary integer labels."""
    flat = (
        rgb[..., 0].astype(np.int64)
        | (rgb[..., 1].astype(np.int64) << 8)
        | (rgb[..., 2].astype(np.int64) << 16)
    )
    _, inv = np.unique(flat, return_inverse=True)
    return inv.reshape(flat.shape)
