"""Two ancestor chains coupled through one excluded region.

The chains share the union of their excluded regions, and the head of
each chain is planted as a candidate nearest point for the other: when
the advancing chain (the one with the smaller backward time) finds the
other chain's head strictly nearest, the two lines of descent have met.
The meeting time and position feed the tail estimators for the
coalescence-time rate and the conjectured meeting-distance exponent.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .excluded_area import (
    ChainState,
    TraceRow,
    nearest_in_complement,
    _disc_minus_region_area,
    _grown_diameter,
)
from .geometry import DiscUnion, distance
from .rng import RngStream


@dataclass(frozen=True)
class CoalescenceRecord:
    i_coal: int  # coupled-process step at which the chains met
    t_coal: float  # backward meeting time (censoring bound when censored)
    z_coal: tuple[float, float] | None  # None on timeout
    censored: bool


@dataclass
class CoupledState:
    comp1: ChainState
    comp2: ChainState
    t0_offset: float
    step: int = 0
    coalesced: CoalescenceRecord | None = None


def coupled_init(z1, z2, t0: float, rng: RngStream) -> CoupledState:
    """Initial coupled state: tau2 and tau1 + t0 are independent Exp(1)."""
    if t0 < 0:
        raise ValueError("time offset t0 must be nonnegative")
    tau1 = float(rng.exponential()) - t0
    tau2 = float(rng.exponential())
    return CoupledState(
        comp1=_chain_at(z1, tau1),
        comp2=_chain_at(z2, tau2),
        t0_offset=t0,
    )


def coupled_step(s: CoupledState, rng: RngStream, area_samples: int = 0) -> CoupledState:
    """Advance the component with the smaller backward time.

    The advancing head samples the nearest point of a rate e^{-tau_min}
    Poisson process on the complement of the joint excluded region; if
    the other head is strictly nearer than that sample, the chains
    coalesce at the other head's position and time.
    """
    if s.coalesced is not None:
        raise ValueError("cannot step a coalesced coupled chain")
    if s.comp1.tau == s.comp2.tau:
        raise RuntimeError("tied backward times in the coupled chain")
    if s.comp1.tau < s.comp2.tau:
        adv, oth = s.comp1, s.comp2
        first_advances = True
    else:
        adv, oth = s.comp2, s.comp1
        first_advances = False

    rate = math.exp(-adv.tau)
    if rate == 0.0:
        raise OverflowError(f"tau={adv.tau} too large: step rate underflows")
    joint = _joint_region(adv.region, oth.region)
    d_plant = distance(adv.z, oth.z)
    pt, r = nearest_in_complement(adv.z, joint, rate, rng, cutoff=d_plant)

    if r >= d_plant:  # the planted head wins: lines of descent meet
        record = CoalescenceRecord(
            i_coal=s.step + 1, t_coal=oth.tau, z_coal=oth.z, censored=False
        )
        return CoupledState(
            comp1=s.comp1,
            comp2=s.comp2,
            t0_offset=s.t0_offset,
            step=s.step + 1,
            coalesced=record,
        )

    inc, inc_se = _disc_minus_region_area(adv.z, r, joint, area_samples, rng)
    grown = ChainState(
        region=adv.region.with_disc(adv.z, r),
        z=pt,
        tau=adv.tau + float(rng.exponential()),
        step=adv.step + 1,
        diam=_grown_diameter(adv.diam, adv.region, adv.z, r),
        trace=adv.trace,
    )
    grown.trace.append(
        TraceRow(grown.step, grown.tau, pt[0], pt[1], inc, inc_se, grown.diam)
    )
    return CoupledState(
        comp1=grown if first_advances else s.comp1,
        comp2=s.comp2 if first_advances else grown,
        t0_offset=s.t0_offset,
        step=s.step + 1,
        coalesced=None,
    )


def coupled_run(
    s: CoupledState, max_steps: int, rng: RngStream
) -> CoalescenceRecord:
    """Run to coalescence or to the step budget (returned as censored).

    A censored record carries the smaller backward time reached, which is
    a valid right-censoring bound for the coalescence-time tail fits.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    while s.coalesced is None and s.step < max_steps:
        s = coupled_step(s, rng)
    if s.coalesced is not None:
        return s.coalesced
    return CoalescenceRecord(
        i_coal=s.step,
        t_coal=min(s.comp1.tau, s.comp2.tau),
        z_coal=None,
        censored=True,
    )


def _chain_at(z, tau0: float) -> ChainState:
    x, y = float(z[0]), float(z[1])
    state = ChainState(
        region=DiscUnion([((x, y), 0.0)]), z=(x, y), tau=tau0, step=0, diam=0.0
    )
    state.trace.append(TraceRow(0, tau0, x, y, 0.0, 0.0, 0.0))
    return state


def _joint_region(a: DiscUnion, b: DiscUnion) -> DiscUnion:
    joint = DiscUnion.__new__(DiscUnion)
    joint.centers = np.vstack([a.centers, b.centers])
    joint.radii = np.concatenate([a.radii, b.radii])
    return joint


# -- shared-nearest-point event -----------------------------------------------


def shared_nearest_prob_mc(
    d: float, r: float, lam: float, n_trials: int, rng: RngStream
) -> tuple[float, float]:
    """Monte Carlo probability that two points share their nearest neighbor.

    Event: for points z1, z2 at distance d, the nearest point of a rate
    ``lam`` Poisson process to z1 is also the nearest to z2, and both
    distances exceed r.  Returns (estimate, standard error).
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    if lam <= 0:
        raise ValueError("intensity must be positive")
    # Window half-width: nearest neighbors of both anchors lie inside with
    # probability 1 - O(e^{-46}).
    reach = math.sqrt(46.0 / (math.pi * lam))
    half = d / 2.0 + reach
    z1 = np.array([-d / 2.0, 0.0])
    z2 = np.array([d / 2.0, 0.0])

    hits = 0
    block = max(1, min(n_trials, int(2e6 / max(lam * (2 * half) ** 2, 1.0))))
    done = 0
    while done < n_trials:
        m = min(block, n_trials - done)
        counts = rng.poisson(lam * (2 * half) ** 2, m)
        total = int(np.sum(counts))
        pts = rng.uniform(-half, half, (total, 2))
        trial = np.repeat(np.arange(m), counts)
        d1 = np.hypot(pts[:, 0] - z1[0], pts[:, 1] - z1[1])
        d2 = np.hypot(pts[:, 0] - z2[0], pts[:, 1] - z2[1])
        starts = np.searchsorted(trial, np.arange(m))
        order1 = np.lexsort((d1, trial))
        order2 = np.lexsort((d2, trial))
        valid = counts > 0
        i1 = order1[starts[valid]]
        i2 = order2[starts[valid]]
        ok = (i1 == i2) & (d1[i1] > r) & (d2[i2] > r)
        hits += int(np.count_nonzero(ok))
        done += m
    p = hits / n_trials
    return p, math.sqrt(p * (1.0 - p) / n_trials)


def shared_nearest_lower_bound(d: float, r: float, lam: float, c0: float) -> float:
    """Analytic lower bound exp(-lam pi (r+d)^2) - 2 c0 sqrt(lam) d."""
    return math.exp(-lam * math.pi * (r + d) ** 2) - 2.0 * c0 * math.sqrt(lam) * d


def calibrate_nearest_gap_density(
    n_trials: int, rng: RngStream, bin_width: float = 0.002
) -> dict:
    """Estimate the peak density of (second nearest - nearest) distances.

    For a rate-1 Poisson process, pi D1^2 and pi (D2^2 - D1^2) are
    independent Exponential(1), so the gap D2 - D1 can be sampled without
    spatial search.  The recorded peak bin density bounds the density
    constant used by the shared-nearest lower bound.
    """
    e1 = rng.exponential(1.0, n_trials)
    e2 = rng.exponential(1.0, n_trials)
    d1 = np.sqrt(e1 / math.pi)
    gap = np.sqrt((e1 + e2) / math.pi) - d1
    edges = np.arange(0.0, float(np.max(gap)) + 2 * bin_width, bin_width)
    hist, _ = np.histogram(gap, bins=edges)
    density = hist / (n_trials * bin_width)
    peak = float(np.max(density))
    return {
        "c0": peak,
        "intensity": 1.0,
        "trials": n_trials,
        "bin_width": bin_width,
        "peak_bin": float(edges[int(np.argmax(density))]),
    }


def load_gap_density_bound() -> float:
    """The calibrated density constant from the packaged fixture."""
    text = (
        resources.files("planecolor")
        .joinpath("data/nearest_gap_density.json")
        .read_text(encoding="utf-8")
    )
    return float(json.loads(text)["c0"])
