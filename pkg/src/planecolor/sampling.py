"""Poisson samplers: spatial, space-time, and reversed lifetimes.

The space-time point process has mean measure e^t dt dz, so the particles
born up to time t form a spatial Poisson process of intensity e^t per unit
area.  Run backwards, each particle's elapsed lifetime is an independent
Exponential(1) variable (thinning), which `reverse_lifetimes` samples.
"""

from __future__ import annotations

import math

import numpy as np

from .rng import RngStream
from .windows import Window


def sample_ppp(rate: float, w: Window, rng: RngStream) -> np.ndarray:
    """Spatial Poisson process of the given intensity on the window.

    Returns an (n, 2) position array with n ~ Poisson(rate * area).
    """
    if rate < 0:
        raise ValueError(f"negative intensity {rate}")
    n = int(rng.poisson(rate * w.area))
    return _uniform_points(n, w, rng)


def sample_spacetime_ppp(
    t_lo: float, t_hi: float, w: Window, rng: RngStream
) -> tuple[np.ndarray, np.ndarray]:
    """Space-time Poisson sample with mean measure e^t dt dz on (t_lo, t_hi].

    ``t_lo = -inf`` means the entire past.  Returns (times, positions)
    sorted by birth time; count ~ Poisson((e^{t_hi} - e^{t_lo}) * area),
    times have density proportional to e^t, positions are uniform and
    independent of the times.
    """
    if not t_lo < t_hi:
        raise ValueError(f"need t_lo < t_hi, got {t_lo} >= {t_hi}")
    lo = math.exp(t_lo) if t_lo != -math.inf else 0.0
    hi = math.exp(t_hi)
    n = int(rng.poisson((hi - lo) * w.area))
    # Inverse CDF of the e^t density on (t_lo, t_hi].
    u = rng.random(n)
    times = np.log(lo + u * (hi - lo))
    xy = _uniform_points(n, w, rng)
    order = np.argsort(times, kind="stable")
    return times[order], xy[order]


def reverse_lifetimes(
    positions: np.ndarray, t: float, rng: RngStream
) -> tuple[np.ndarray, np.ndarray]:
    """Attach backward birth times t - Exp(1) to the given positions.

    This realizes the reversed-time view: the elapsed lifetimes of the
    particles alive at time t are i.i.d. Exponential(1).
    """
    positions = np.asarray(positions, dtype=float).reshape(-1, 2)
    times = t - rng.exponential(1.0, len(positions))
    return times, positions


def _uniform_points(n: int, w: Window, rng: RngStream) -> np.ndarray:
    pts = np.empty((n, 2))
    pts[:, 0] = rng.uniform(w.x_min, w.x_max, n)
    pts[:, 1] = rng.uniform(w.y_min, w.y_max, n)
    return pts
