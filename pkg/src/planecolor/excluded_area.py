"""Backward ancestor chain over a growing excluded region.

Tracing a particle's line of descent backwards is a Markov chain on
triples (region, head, tau): the region is a union of discs known to
contain no earlier particle, the head is the current ancestor position,
and tau is its birth time run backwards.  One step samples the nearest
point of a rate e^{-tau} Poisson process on the complement of the
region, swallows the disc out to that point, and advances tau by an
independent Exponential(1).

The module also provides the dominating tail variable for scaled head
displacement (a weighted series over a rate-1 Poisson path) and the two
shot-noise processes whose occupation times control how often the
scaled region diameter stays large.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import DiscUnion, union_diameter
from .rng import RngStream

ENVELOPE_REL_TRUNC = 1e-12


@dataclass(frozen=True)
class TraceRow:
    step: int
    tau: float
    x: float
    y: float
    area_inc: float  # Monte Carlo estimate; NaN when measurement disabled
    area_inc_se: float
    diam: float


@dataclass
class ChainState:
    region: DiscUnion
    z: tuple[float, float]
    tau: float
    step: int
    diam: float
    trace: list[TraceRow] = field(default_factory=list)


def chain_init(z0, rng: RngStream) -> ChainState:
    """Start a chain at z0 with a degenerate region and tau ~ Exp(1)."""
    x, y = float(z0[0]), float(z0[1])
    tau0 = float(rng.exponential())
    state = ChainState(
        region=DiscUnion([((x, y), 0.0)]),
        z=(x, y),
        tau=tau0,
        step=0,
        diam=0.0,
    )
    state.trace.append(TraceRow(0, tau0, x, y, 0.0, 0.0, 0.0))
    return state


def nearest_in_complement(
    z,
    region: DiscUnion,
    rate: float,
    rng: RngStream,
    cutoff: float = math.inf,
):
    """Nearest point to z of a rate-`rate` Poisson process off the region.

    Exact sampling by annular shells around z: each shell gets a Poisson
    number of uniform points, points inside the region are rejected, and
    the scan stops at the first shell that keeps a point (later shells
    are farther).  Shell width max(rate^{-1/2}, diam(region)/8) keeps the
    expected work bounded; shells eventually clear the region, so the
    scan terminates almost surely.

    With a finite ``cutoff`` the scan may stop early and return
    ``(None, inf)``, guaranteeing no process point lies strictly within
    the cutoff distance.
    """
    if not rate > 0:
        raise ValueError(f"rate must be positive, got {rate}")
    zx, zy = float(z[0]), float(z[1])
    width = max(rate**-0.5, (union_diameter(region) / 8.0 if len(region) else 0.0))
    best_r = math.inf
    best_pt = None
    k = 0
    while True:
        r_in = k * width
        if r_in >= cutoff or best_r <= r_in:
            return best_pt, best_r
        r_out = r_in + width
        mean = rate * math.pi * (r_out * r_out - r_in * r_in)
        m = int(rng.poisson(mean))
        if m > 0:
            u = rng.random(m)
            radii = np.sqrt(r_in * r_in + u * (r_out * r_out - r_in * r_in))
            ang = rng.uniform(0.0, 2.0 * math.pi, m)
            pts = np.column_stack(
                [zx + radii * np.cos(ang), zy + radii * np.sin(ang)]
            )
            keep = ~region.contains_points(pts)
            if np.any(keep):
                radii = radii[keep]
                j = int(np.argmin(radii))
                if radii[j] < best_r:
                    best_r = float(radii[j])
                    best_pt = (float(pts[keep][j, 0]), float(pts[keep][j, 1]))
                return best_pt, best_r
        k += 1


def chain_step(s: ChainState, rng: RngStream, area_samples: int = 4096) -> ChainState:
    """One transition; appends a trace row with the measured area increment.

    ``area_samples`` controls the hit-or-miss estimate of the area the new
    disc adds (0 disables measurement and records NaN).
    """
    rate = math.exp(-s.tau)
    if rate == 0.0:
        raise OverflowError(f"tau={s.tau} too large: step rate underflows")
    pt, r = nearest_in_complement(s.z, s.region, rate, rng)
    inc, inc_se = _disc_minus_region_area(s.z, r, s.region, area_samples, rng)
    region = s.region.with_disc(s.z, r)
    diam = _grown_diameter(s.diam, s.region, s.z, r)
    tau = s.tau + float(rng.exponential())
    state = ChainState(
        region=region, z=pt, tau=tau, step=s.step + 1, diam=diam, trace=s.trace
    )
    state.trace.append(
        TraceRow(state.step, tau, pt[0], pt[1], inc, inc_se, diam)
    )
    return state


def run_until_time(
    s: ChainState, t: float, rng: RngStream, area_samples: int = 4096
) -> ChainState:
    """Apply steps until tau exceeds t (no-op when tau >= t already)."""
    while s.tau < t:
        s = chain_step(s, rng, area_samples=area_samples)
    return s


def scaled_increments(trace: list[TraceRow]) -> np.ndarray:
    """Area increments scaled by e^{-tau} of the step that produced them.

    These are i.i.d. Exponential(1) up to Monte Carlo measurement noise.
    """
    out = []
    for prev, row in zip(trace, trace[1:]):
        out.append(math.exp(-prev.tau) * row.area_inc)
    return np.asarray(out)


def _disc_minus_region_area(
    z, r: float, region: DiscUnion, n_samples: int, rng: RngStream
) -> tuple[float, float]:
    if n_samples <= 0:
        return math.nan, math.nan
    if r == 0.0:
        return 0.0, 0.0
    disc_area = math.pi * r * r
    u = rng.random(n_samples)
    radii = r * np.sqrt(u)
    ang = rng.uniform(0.0, 2.0 * math.pi, n_samples)
    pts = np.column_stack(
        [z[0] + radii * np.cos(ang), z[1] + radii * np.sin(ang)]
    )
    p_hat = float(np.mean(~region.contains_points(pts)))
    se = disc_area * math.sqrt(p_hat * (1.0 - p_hat) / n_samples)
    return disc_area * p_hat, se


def _grown_diameter(diam: float, region: DiscUnion, center, r: float) -> float:
    """Diameter after adding disc(center, r); incremental and exact."""
    best = max(diam, 2.0 * r)
    if len(region):
        dx = region.centers[:, 0] - center[0]
        dy = region.centers[:, 1] - center[1]
        reach = np.sqrt(dx * dx + dy * dy) + region.radii + r
        best = max(best, float(np.max(reach)))
    return best


# -- dominating displacement envelope ----------------------------------------


def sample_displacement_envelope(rng: RngStream) -> float:
    """One draw of the tail variable dominating scaled head displacement.

    The variable is (2/sqrt(pi)) * sum_u u e^{-s_u} g_u^{1/2} with s_u a
    rate-1 Poisson path and g_u i.i.d. Exponential(1).  The series is
    truncated once the analytic remainder bound (2/sqrt(pi)) e^{-s_u}
    (u + 2), which pads E[g^{1/2}] up to 1, drops below 1e-12 of the
    partial sum.
    """
    c = 2.0 / math.sqrt(math.pi)
    sigma = 0.0
    partial = 0.0
    u = 0
    while True:
        u += 1
        sigma += float(rng.exponential())
        partial += c * u * math.exp(-sigma) * math.sqrt(rng.exponential())
        if c * math.exp(-sigma) * (u + 2) < ENVELOPE_REL_TRUNC * partial:
            return partial


def sample_displacement_envelope_batch(
    n: int, rng: RngStream, chunk: int = 100_000
) -> np.ndarray:
    """Vectorized envelope draws; same series and truncation rule."""
    c = 2.0 / math.sqrt(math.pi)
    out = np.empty(n)
    done = 0
    while done < n:
        m = min(chunk, n - done)
        sigma = np.zeros(m)
        partial = np.zeros(m)
        active = np.ones(m, dtype=bool)
        u = 0
        while np.any(active):
            u += 1
            idx = np.flatnonzero(active)
            sigma[idx] += rng.exponential(1.0, len(idx))
            partial[idx] += (
                c * u * np.exp(-sigma[idx]) * np.sqrt(rng.exponential(1.0, len(idx)))
            )
            bound = c * np.exp(-sigma[idx]) * (u + 2)
            active[idx] = bound >= ENVELOPE_REL_TRUNC * partial[idx]
        out[done : done + m] = partial
        done += m
    return out


def envelope_tail(samples: np.ndarray, rs) -> list[tuple[float, float, float]]:
    """Empirical survival estimates: rows (r, P(X > r), standard error)."""
    samples = np.asarray(samples)
    n = len(samples)
    rows = []
    for r in rs:
        p = float(np.mean(samples > r))
        rows.append((float(r), p, math.sqrt(p * (1.0 - p) / n)))
    return rows


# -- shot-noise processes ------------------------------------------------------

AREA_KIND = "area"  # jumps Exp(1), decays at rate 1; tracks scaled area
DIAMETER_KIND = "diameter"  # jumps Exp(1)^{1/2}, decays at rate 1/2


@dataclass
class ShotNoiseSummary:
    kind: str
    duration: float
    mean: float
    occupation: dict[float, float]
    grid_t: np.ndarray
    grid_x: np.ndarray


def shot_noise_run(
    kind: str,
    duration: float,
    rng: RngStream,
    levels: tuple[float, ...] = (),
    grid_points: int = 512,
) -> ShotNoiseSummary:
    """Exact event-driven path of the area/diameter shot-noise process.

    Jumps arrive at rate 1; between jumps the path decays exponentially
    (rate 1 for the area kind, 1/2 for the diameter kind).  Reports the
    time-average over [0, duration] and the occupation fraction above
    each requested level, both computed exactly segment by segment.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    if kind == AREA_KIND:
        beta, power = 1.0, 1.0
    elif kind == DIAMETER_KIND:
        beta, power = 0.5, 0.5
    else:
        raise ValueError(f"unknown shot-noise kind {kind!r}")

    times = _poisson_times(duration, rng)
    jumps = rng.exponential(1.0, len(times)) ** power

    integral = 0.0
    above = {float(b): 0.0 for b in levels}
    x = 0.0
    t_prev = 0.0
    seg_start_values = np.empty(len(times) + 1)
    seg_start_times = np.empty(len(times) + 1)
    i_seg = 0
    for t_j, jump in zip(times, jumps):
        dt = t_j - t_prev
        integral += x * (1.0 - math.exp(-beta * dt)) / beta
        for b in above:
            if x > b:
                above[b] += min(dt, math.log(x / b) / beta) if b > 0 else dt
        seg_start_times[i_seg] = t_prev
        seg_start_values[i_seg] = x
        i_seg += 1
        x = x * math.exp(-beta * dt) + jump
        t_prev = t_j
    dt = duration - t_prev
    integral += x * (1.0 - math.exp(-beta * dt)) / beta
    for b in above:
        if x > b:
            above[b] += min(dt, math.log(x / b) / beta) if b > 0 else dt
    seg_start_times[i_seg] = t_prev
    seg_start_values[i_seg] = x

    grid_t = np.linspace(0.0, duration, grid_points)
    seg = np.searchsorted(seg_start_times[: i_seg + 1], grid_t, side="right") - 1
    grid_x = seg_start_values[seg] * np.exp(-beta * (grid_t - seg_start_times[seg]))

    return ShotNoiseSummary(
        kind=kind,
        duration=duration,
        mean=integral / duration,
        occupation={b: v / duration for b, v in above.items()},
        grid_t=grid_t,
        grid_x=grid_x,
    )


def occupation_bad_fraction(trace: list[TraceRow], b: float, duration: float) -> float:
    """Fraction of [0, duration] on which the scaled diameter exceeds b.

    The interval [tau_{i-1}, tau_i) counts as bad when
    e^{-tau_i / 2} * diam_i > b.  The trace must reach ``duration``.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    if not trace or trace[-1].tau < duration:
        raise ValueError("trace does not cover the requested duration")
    bad = 0.0
    for prev, row in zip(trace, trace[1:]):
        if math.exp(-row.tau / 2.0) * row.diam > b:
            lo = min(max(prev.tau, 0.0), duration)
            hi = min(max(row.tau, 0.0), duration)
            bad += hi - lo
    return bad / duration


def _poisson_times(duration: float, rng: RngStream) -> np.ndarray:
    """Points of a rate-1 Poisson process on (0, duration], sorted."""
    times = []
    t = 0.0
    block = max(64, int(duration * 1.2) + 32)
    while True:
        incs = rng.exponential(1.0, block)
        cum = t + np.cumsum(incs)
        inside = cum[cum <= duration]
        times.append(inside)
        if len(inside) < len(cum):
            break
        t = float(cum[-1])
    return np.concatenate(times)
