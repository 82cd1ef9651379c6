import math

import numpy as np
import pytest
import scipy.stats as sps

from planecolor import DiscUnion, RngStream, union_area_mc
from planecolor.excluded_area import (
    AREA_KIND,
    DIAMETER_KIND,
    chain_init,
    chain_step,
    envelope_tail,
    nearest_in_complement,
    occupation_bad_fraction,
    run_until_time,
    sample_displacement_envelope,
    sample_displacement_envelope_batch,
    scaled_increments,
    shot_noise_run,
)


def test_chain_init():
    rng = RngStream(1, 0)
    taus = [chain_init((0.0, 0.0), rng.substream(k)).tau for k in range(20_000)]
    m = np.mean(taus)
    assert abs(m - 1.0) <= 3.0 / math.sqrt(len(taus))
    s = chain_init((2.0, -1.0), RngStream(5, 3))
    assert len(s.region) == 1 and s.region.contains((2.0, -1.0))
    assert s.region.radii[0] == 0.0
    again = chain_init((2.0, -1.0), RngStream(5, 3))
    assert again.tau == s.tau  # deterministic under a fixed stream


def test_nearest_in_complement_laws():
    rng = RngStream(2, 0)
    lam = 2.0
    point = DiscUnion([((0.0, 0.0), 0.0)])
    rs = np.array(
        [nearest_in_complement((0, 0), point, lam, rng)[1] for _ in range(8000)]
    )
    u = lam * math.pi * rs**2
    assert sps.kstest(u, "expon").pvalue > 0.001
    med = math.sqrt(math.log(2.0) / (math.pi * lam))
    assert np.median(rs) == pytest.approx(med, rel=0.05)

    r0 = 0.5
    blocked = DiscUnion([((0.0, 0.0), r0)])
    rs2 = np.array(
        [nearest_in_complement((0, 0), blocked, lam, rng)[1] for _ in range(8000)]
    )
    assert np.min(rs2) >= r0
    u2 = lam * math.pi * (rs2**2 - r0**2)
    assert sps.kstest(u2, "expon").pvalue > 0.001


def test_nearest_in_complement_never_inside():
    rng = RngStream(3, 0)
    du = DiscUnion([((0.0, 0.0), 1.0), ((1.5, 0.3), 0.8), ((-1.0, -0.4), 0.5)])
    for k in range(2000):
        pt, r = nearest_in_complement((0.9, 0.0), du, 1.0, rng)
        assert not du.contains(pt)
        assert r > 0


def test_nearest_in_complement_cutoff():
    # the cutoff guarantees exactness below it: either a point strictly
    # within the cutoff is returned (the true nearest), or the caller may
    # safely conclude nothing lies within the cutoff
    rng = RngStream(4, 0)
    point = DiscUnion([((0.0, 0.0), 0.0)])
    cutoff = 0.3
    within = 0
    n = 4000
    for k in range(n):
        pt, r = nearest_in_complement((0, 0), point, 1.0, rng, cutoff=cutoff)
        if pt is None:
            assert r == math.inf
        elif r < cutoff:
            within += 1
    # P(nearest < 0.3) = 1 - exp(-pi 0.09) ~ 0.2464
    p = 1.0 - math.exp(-math.pi * cutoff**2)
    se = math.sqrt(p * (1 - p) / n)
    assert abs(within / n - p) <= 4 * se


def test_nearest_rejects_bad_rate():
    with pytest.raises(ValueError):
        nearest_in_complement((0, 0), DiscUnion([((0, 0), 0.0)]), 0.0, RngStream(0, 0))


def test_chain_step_geometry():
    rng = RngStream(5, 0)
    s = chain_init((0.0, 0.0), rng)
    for _ in range(12):
        prev = s
        s = chain_step(s, rng, area_samples=2048)
        # head sits on the boundary of the newest disc
        c = s.region.centers[-1]
        r = s.region.radii[-1]
        assert math.dist(s.z, c) == pytest.approx(r, rel=1e-12)
        assert s.tau > prev.tau
        assert s.step == prev.step + 1
    # diameters nondecreasing, areas positive
    diams = [row.diam for row in s.trace]
    assert all(b >= a for a, b in zip(diams, diams[1:]))
    assert all(row.area_inc >= 0 for row in s.trace)


def test_scaled_increments_are_exponential():
    rng = RngStream(6, 0)
    thetas = []
    for k in range(60):
        r = rng.substream(k)
        s = chain_init((0.0, 0.0), r)
        for _ in range(15):
            s = chain_step(s, r, area_samples=8192)
        thetas.extend(scaled_increments(s.trace))
    assert sps.kstest(thetas, "expon").pvalue > 0.001


def test_cumulative_area_cross_check():
    # summed per-step increments match an independent area measurement
    rng = RngStream(7, 0)
    for k in range(10):
        r = rng.substream(k)
        s = chain_init((0.0, 0.0), r)
        for _ in range(10):
            s = chain_step(s, r, area_samples=16_384)
        inc_sum = sum(row.area_inc for row in s.trace)
        inc_se = math.sqrt(sum(row.area_inc_se**2 for row in s.trace))
        direct, direct_se = union_area_mc(s.region, 200_000, r)
        tol = 4.0 * math.hypot(inc_se, direct_se)
        assert abs(inc_sum - direct) <= tol


def test_run_until_time():
    rng = RngStream(8, 0)
    s = chain_init((0.0, 0.0), rng)
    assert run_until_time(s, s.tau, rng).step == 0  # no new steps
    # the times tau_0 < tau_1 < ... form a rate-1 Poisson process, so the
    # number of them below t (= the final step index) is Poisson(t)
    t = 6.0
    counts = []
    for k in range(300):
        r = rng.substream(k)
        state = run_until_time(chain_init((0.0, 0.0), r), t, r, area_samples=0)
        counts.append(state.step)
        assert state.trace[-1].tau >= t
        assert state.trace[-2].tau < t
    from planecolor import poisson_gof

    assert poisson_gof(counts, t) > 0.001


def test_envelope_sampler():
    rng = RngStream(9, 0)
    xs = np.array([sample_displacement_envelope(rng) for _ in range(4000)])
    assert np.all(xs > 0)
    batch = sample_displacement_envelope_batch(200_000, rng)
    m = batch.mean()
    se = batch.std(ddof=1) / math.sqrt(len(batch))
    assert abs(m - 2.0) <= 3 * se
    # scalar and batch draws agree in law
    assert sps.ks_2samp(xs, batch[:4000]).pvalue > 0.001
    # tail is monotone and integrable: int r G(r) dr stabilizes
    rows = envelope_tail(batch, [0.5, 1.0, 2.0, 4.0, 8.0])
    survs = [p for _, p, _ in rows]
    assert survs == sorted(survs, reverse=True)
    rs = np.linspace(0, batch.max(), 2000)
    g = np.array([np.mean(batch > r) for r in rs])
    integrand = rs * g
    total = np.trapezoid(integrand, rs)
    half = np.trapezoid(integrand[: len(rs) // 2], rs[: len(rs) // 2])
    assert total < math.inf
    assert (total - half) / total < 0.05  # tail contribution has died off


def test_shot_noise_means():
    rng = RngStream(10, 0)
    v = shot_noise_run(AREA_KIND, 5000.0, rng.substream(1), levels=(8.0, 2.0))
    w = shot_noise_run(DIAMETER_KIND, 5000.0, rng.substream(2), levels=(8.0, 2.0))
    assert v.mean == pytest.approx(1.0, rel=0.08)
    assert w.mean == pytest.approx(math.sqrt(math.pi), rel=0.08)
    # occupation decreasing in the level
    assert v.occupation[8.0] <= v.occupation[2.0]
    assert w.occupation[8.0] <= w.occupation[2.0]
    with pytest.raises(ValueError):
        shot_noise_run("other", 10.0, rng)
    with pytest.raises(ValueError):
        shot_noise_run(AREA_KIND, 0.0, rng)


def test_occupation_bad_fraction():
    rng = RngStream(11, 0)
    s = chain_init((0.0, 0.0), rng)
    s = run_until_time(s, 20.0, rng, area_samples=0)
    assert occupation_bad_fraction(s.trace, math.inf, 20.0) == 0.0
    # level 0: every completed interval is bad, only [0, tau_0) is exempt
    frac0 = occupation_bad_fraction(s.trace, 0.0, 20.0)
    assert frac0 == pytest.approx((20.0 - s.trace[0].tau) / 20.0)
    with pytest.raises(ValueError):
        occupation_bad_fraction(s.trace, 1.0, 1e9)  # trace too short
    mid = occupation_bad_fraction(s.trace, 1.0, 20.0)
    assert 0.0 <= mid <= 1.0
