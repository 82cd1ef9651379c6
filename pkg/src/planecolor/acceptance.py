"""Acceptance criteria: quantitative checks behind the `verify` command.

Each criterion is a function returning a :class:`CriterionResult`; the
pytest acceptance module and the CLI both run these.  All runs use fixed
seeds so the suite is deterministic; the nightly test markers rerun the
statistical portions with fresh entropy.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from .coupled import (
    coupled_init,
    coupled_run,
    load_gap_density_bound,
    shared_nearest_lower_bound,
    shared_nearest_prob_mc,
)
from .excluded_area import (
    chain_init,
    chain_step,
    envelope_tail,
    occupation_bad_fraction,
    run_until_time,
    sample_displacement_envelope_batch,
    scaled_increments,
)
from .excluded_area import shot_noise_run, AREA_KIND, DIAMETER_KIND
from .forest import grow_elementary, grow_spacetime
from .geometry import (
    isodiametric_holds,
    merged_diameter_bound,
    random_disc_union,
    union_area_mc,
    union_diameter,
)
from .grid import GridIndex
from .merging import CellMap, init_cells
from .raster import boundary_mask, rasterize_voronoi
from .rng import RngStream
from .sampling import reverse_lifetimes, sample_ppp, sample_spacetime_ppp
from .stats import (
    EXPONENTIAL,
    POWER,
    bl_distance,
    box_count_dimension,
    chisq_count_gof,
    exp_tail_fit,
    poisson_gof,
    power_tail_fit,
    tail_fit_stability,
)
from .windows import unit_square, unit_torus

DEFAULT_SEED = 20230817
GOF_P = 0.001  # per-run p-value floor for distributional checks


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    details: str
    seconds: float

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return (
            f"[{tag}] {self.number:02d} {self.name}: "
            f"{self.details} ({self.seconds:.1f}s)"
        )


def _result(number, name, start, passed, details) -> CriterionResult:
    return CriterionResult(
        number=number,
        name=name,
        passed=bool(passed),
        details=details,
        seconds=time.time() - start,
    )


# -- 1: exact nearest neighbor -------------------------------------------------


def criterion_01_grid_exactness(seed: int = DEFAULT_SEED) -> CriterionResult:
    """Grid nearest equals brute force on 1e4 points x 1e4 queries."""
    start = time.time()
    n_pts, n_q = 10_000, 10_000
    mismatches = 0
    for stream, window in ((1, unit_torus()), (2, unit_square())):
        rng = RngStream(seed, stream)
        pts = rng.uniform(0.0, 1.0, (n_pts, 2))
        qs = rng.uniform(0.0, 1.0, (n_q, 2))
        idx = GridIndex(window)
        for i in range(n_pts):
            idx.insert(i, float(pts[i, 0]), float(pts[i, 1]))
        got = np.fromiter(
            (idx.nearest(q)[0] for q in qs), count=n_q, dtype=np.int64
        )
        want = np.empty(n_q, dtype=np.int64)
        for lo in range(0, n_q, 256):
            hi = min(lo + 256, n_q)
            dx = pts[None, :, 0] - qs[lo:hi, None, 0]
            dy = pts[None, :, 1] - qs[lo:hi, None, 1]
            if window.is_torus:
                dx -= np.round(dx)
                dy -= np.round(dy)
            want[lo:hi] = np.argmin(dx * dx + dy * dy, axis=1)
        mismatches += int(np.count_nonzero(got != want))
    return _result(
        1,
        "nn-grid-exactness",
        start,
        mismatches == 0,
        f"{mismatches} mismatches over 2x{n_q} queries (torus+plane)",
    )


# -- 2: Poisson sampler laws ----------------------------------------------------


def criterion_02_poisson_laws(seed: int = DEFAULT_SEED) -> CriterionResult:
    start = time.time()
    rng = RngStream(seed, 10)
    w = unit_torus()
    reps = 400
    pvals = {}
    for label, t in (("t=ln50", math.log(50.0)), ("t=ln200", math.log(200.0))):
        rate = math.exp(t)
        spatial = [len(sample_ppp(rate, w, rng.substream(k))) for k in range(reps)]
        st = [
            len(sample_spacetime_ppp(-math.inf, t, w, rng.substream(1000 + k))[0])
            for k in range(reps)
        ]
        pvals[f"spatial@{label}"] = poisson_gof(spatial, rate)
        pvals[f"spacetime@{label}"] = poisson_gof(st, rate)
    pts = rng.uniform(0.0, 1.0, (100_000, 2))
    times, _ = reverse_lifetimes(pts, 3.0, rng)
    pvals["reverse-lifetimes"] = float(sps.kstest(3.0 - times, "expon").pvalue)
    worst = min(pvals.values())
    detail = " ".join(f"{k}:p={v:.3g}" for k, v in pvals.items())
    return _result(2, "poisson-laws", start, worst > GOF_P, detail)


# -- 3: area-increment law ------------------------------------------------------


def criterion_03_area_increment_law(seed: int = DEFAULT_SEED) -> CriterionResult:
    """Scaled chain area increments are Exp(1), independent of time steps."""
    start = time.time()
    rng = RngStream(seed, 20)
    thetas = []
    dtaus = []
    n_chains, n_steps = 100, 20
    for k in range(n_chains):
        r = rng.substream(k)
        s = chain_init((0.0, 0.0), r)
        for _ in range(n_steps):
            s = chain_step(s, r, area_samples=16_384)
        thetas.extend(scaled_increments(s.trace))
        taus = [row.tau for row in s.trace]
        dtaus.extend(np.diff(taus))
    thetas = np.asarray(thetas)
    dtaus = np.asarray(dtaus)
    p_ks = float(sps.kstest(thetas, "expon").pvalue)
    rho = float(np.corrcoef(thetas, dtaus)[0, 1])
    rho_tol = 3.0 / math.sqrt(len(thetas))
    passed = p_ks > GOF_P and abs(rho) < rho_tol
    return _result(
        3,
        "area-increment-law",
        start,
        passed,
        f"KS p={p_ks:.3g} over {len(thetas)} steps; |corr|={abs(rho):.4f}<{rho_tol:.4f}",
    )


# -- 4: geometric inequalities ---------------------------------------------------


def criterion_04_geometric_inequalities(seed: int = DEFAULT_SEED) -> CriterionResult:
    start = time.time()
    rng = RngStream(seed, 30)
    iso_violations = 0
    bound_violations = 0
    n_fuzz = 10_000
    mc = 2048

    for k in range(n_fuzz):
        r = rng.substream(k)
        du = random_disc_union(
            1 + int(r.integers(1, 8)), r, chained=bool(r.integers(0, 2))
        )
        area, se = union_area_mc(du, mc, r)
        # 4 sigma: nested unions hit the inequality with equality, where a
        # 3-sigma one-sided check trips on pure Monte Carlo noise.
        if not isodiametric_holds(du, area, se, sigmas=4.0):
            iso_violations += 1

    for k in range(n_fuzz):
        r = rng.substream(100_000 + k)
        base = random_disc_union(1 + int(r.integers(1, 6)), r)
        # center of the added disc inside the base: a point of some member disc
        i = int(r.integers(0, len(base)))
        ang = float(r.uniform(0.0, 2.0 * math.pi))
        rad = base.radii[i] * math.sqrt(float(r.random()))
        cx = base.centers[i, 0] + rad * math.cos(ang)
        cy = base.centers[i, 1] + rad * math.sin(ang)
        disc_r = float(r.exponential(1.0))
        merged = base.with_disc((cx, cy), disc_r)
        a_c, se_c = union_area_mc(base, mc, r)
        a_m, se_m = union_area_mc(merged, mc, r)
        hi = max(a_m + 3 * se_m, max(a_c - 3 * se_c, 0.0))
        bound = merged_diameter_bound(
            union_diameter(base), max(a_c - 3 * se_c, 0.0), hi
        )
        if bound < union_diameter(merged) - 1e-9:
            bound_violations += 1

    # chain traces: iso on cumulative areas, step bound on consecutive rows
    trace_violations = 0
    for k in range(30):
        r = rng.substream(200_000 + k)
        s = chain_init((0.0, 0.0), r)
        for _ in range(15):
            s = chain_step(s, r, area_samples=4096)
        areas = np.cumsum([row.area_inc for row in s.trace])
        ses = np.sqrt(np.cumsum([row.area_inc_se**2 for row in s.trace]))
        diams = [row.diam for row in s.trace]
        for i in range(1, len(areas)):
            quarter_pi = 0.25 * math.pi
            if areas[i] - 3 * ses[i] > quarter_pi * diams[i] ** 2 + 1e-9:
                trace_violations += 1
            lo_prev = max(areas[i - 1] - 3 * ses[i - 1], 0.0)
            hi_cur = max(areas[i] + 3 * ses[i], lo_prev)
            if (
                merged_diameter_bound(diams[i - 1], lo_prev, hi_cur)
                < diams[i] - 1e-9
            ):
                trace_violations += 1

    total = iso_violations + bound_violations + trace_violations
    return _result(
        4,
        "geometric-inequalities",
        start,
        total == 0,
        (
            f"violations: isodiametric {iso_violations}/{n_fuzz}, "
            f"merge bound {bound_violations}/{n_fuzz}, trace {trace_violations}"
        ),
    )


# -- 5: displacement envelope -----------------------------------------------------


def criterion_05_displacement_envelope(seed: int = DEFAULT_SEED) -> CriterionResult:
    start = time.time()
    rng = RngStream(seed, 40)
    n_env = 1_000_000
    env = sample_displacement_envelope_batch(n_env, rng)
    mean = float(env.mean())
    se_mean = float(env.std(ddof=1)) / math.sqrt(n_env)
    mean_ok = abs(mean - 2.0) <= 3.0 * se_mean

    r_grid = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0]
    tail = envelope_tail(env, r_grid)
    monotone = all(a[1] >= b[1] for a, b in zip(tail, tail[1:]))

    # forest displacement exceedances dominated by the envelope tail
    dominated = True
    detail_bits = []
    t0 = math.log(400.0)
    for stream, gap in ((1, 4.0), (2, 6.0)):
        f = grow_spacetime(t0, t0 + gap, unit_torus(), rng.substream(stream))
        disp = f.ancestor_displacement_samples(t0 + gap, t0) * math.exp(t0 / 2.0)
        n = len(disp)
        for r, g, g_se in envelope_tail(env, [1.0, 2.0, 4.0]):
            p = float(np.mean(disp > r))
            p_se = math.sqrt(max(p * (1 - p), 1e-12) / n)
            tol = 3.0 * math.hypot(g_se, p_se)
            if p > g + tol:
                dominated = False
                detail_bits.append(f"gap{gap}:r={r}: {p:.4f}>{g:.4f}+{tol:.4f}")
    passed = mean_ok and monotone and dominated
    detail = (
        f"mean={mean:.4f} (2 +- {3*se_mean:.4f}), tail monotone={monotone}, "
        f"dominated={dominated}"
    )
    if detail_bits:
        detail += " [" + "; ".join(detail_bits) + "]"
    return _result(5, "displacement-envelope", start, passed, detail)


# -- 6: shot noise and occupation --------------------------------------------------


def criterion_06_shot_noise(seed: int = DEFAULT_SEED) -> CriterionResult:
    start = time.time()
    rng = RngStream(seed, 50)
    horizon = 10_000.0
    v = shot_noise_run(AREA_KIND, horizon, rng.substream(1))
    w = shot_noise_run(DIAMETER_KIND, horizon, rng.substream(2))
    v_ok = abs(v.mean - 1.0) <= 0.05 * 1.0
    w_target = math.sqrt(math.pi)
    w_ok = abs(w.mean - w_target) <= 0.05 * w_target

    reps = 1000
    level_b = 8.0
    duration = 40.0
    good = 0
    for k in range(reps):
        r = rng.substream(100 + k)
        s = chain_init((0.0, 0.0), r)
        s = run_until_time(s, duration, r, area_samples=0)
        if occupation_bad_fraction(s.trace, level_b, duration) <= 1.0 / 3.0:
            good += 1
    occ_ok = good >= int(0.99 * reps)
    passed = v_ok and w_ok and occ_ok
    return _result(
        6,
        "shot-noise-occupation",
        start,
        passed,
        (
            f"V mean={v.mean:.4f} (1 +- 5%), W mean={w.mean:.4f} "
            f"({w_target:.4f} +- 5%), occ<=1/3 in {good}/{reps}"
        ),
    )


# -- 7: coalescence tail -----------------------------------------------------------


def criterion_07_coalescence_tail(seed: int = DEFAULT_SEED) -> CriterionResult:
    start = time.time()
    rng = RngStream(seed, 60)
    reps = 10_000
    max_steps = 10_000
    records = []
    for k in range(reps):
        r = rng.substream(k)
        s = coupled_init((-0.5, 0.0), (0.5, 0.0), 0.0, r)
        records.append(coupled_run(s, max_steps, r))
    t_coal = np.array([rec.t_coal for rec in records])
    censored = np.array([rec.censored for rec in records])
    n_cens = int(np.count_nonzero(censored))
    fit = exp_tail_fit(t_coal, 2.0, censored=censored)
    ci_lo = fit.exponent - 1.96 * fit.se
    passed = n_cens < 0.05 * reps and fit.exponent > 0 and ci_lo > 0
    return _result(
        7,
        "coalescence-tail",
        start,
        passed,
        (
            f"rate={fit.exponent:.4f} (95% CI low {ci_lo:.4f}), "
            f"n_tail={fit.n_used}, timeouts {n_cens}/{reps}"
        ),
    )


# -- 8: shared-nearest lower bound ---------------------------------------------------


def criterion_08_shared_nearest_bound(seed: int = DEFAULT_SEED) -> CriterionResult:
    start = time.time()
    rng = RngStream(seed, 70)
    c0 = load_gap_density_bound()
    n = 10_000
    violations = 0
    cells = 0
    min_margin = math.inf
    for lam in (1.0, 4.0):
        for d in (0.02, 0.05, 0.2):
            for r in (0.1, 0.3, 0.6):
                cells += 1
                p, se = shared_nearest_prob_mc(d, r, lam, n, rng.substream(cells))
                bound = shared_nearest_lower_bound(d, r, lam, c0)
                margin = p - (bound - 3.0 * se)
                min_margin = min(min_margin, margin)
                if margin < 0:
                    violations += 1
    return _result(
        8,
        "shared-nearest-bound",
        start,
        violations == 0,
        f"{violations}/{cells} cells violated; min margin {min_margin:.4f} (c0={c0})",
    )


# -- 9: partition dynamics ------------------------------------------------------------


def _voronoi_cells(n_target: float, resolution: int, rng: RngStream) -> CellMap:
    """Roots-only forest -> Voronoi raster -> integer-weight cell map."""
    t1 = math.log(n_target)
    f = grow_spacetime(t1, t1, unit_torus(), rng)
    raster = rasterize_voronoi(f, t1, resolution)
    return init_cells(f, t1, raster)


def criterion_09_partition_dynamics(seed: int = DEFAULT_SEED) -> CriterionResult:
    start = time.time()
    rng = RngStream(seed, 80)

    # (a) thinning GOF + conservation on fixed-size populations
    reps = 1000
    n0 = 100
    delta = math.log(2.0)
    survivors = []
    conserved = True
    for k in range(reps):
        r = rng.substream(k)
        pts = r.uniform(0.0, 1.0, (n0, 2))
        cells = CellMap(unit_torus(), np.arange(n0), pts, np.ones(n0))
        before = cells.total_weight
        lifetimes = r.exponential(1.0, n0)
        doomed = np.flatnonzero(lifetimes < delta)
        for pid in doomed[np.argsort(-lifetimes[doomed], kind="stable")]:
            if cells.live_count == 1:
                break
            cells.merge_step(int(pid))
            if cells.total_weight != before:
                conserved = False
        survivors.append(cells.live_count)
    p_thin = chisq_count_gof(survivors, sps.binom(n0, math.exp(-delta)))

    # (b) raster-weighted conservation (integer pixel units, exact)
    for k in range(200):
        r = rng.substream(10_000 + k)
        cells = _voronoi_cells(100.0, 64, r)
        before = cells.total_weight
        order = r.permutation(cells.live_ids)
        for pid in order[: len(order) // 2]:
            if cells.live_count == 1:
                break
            cells.merge_step(int(pid))
        if cells.total_weight != before:
            conserved = False

    # (c) self-similarity: largest-cell statistics across two scales.
    # Raw whole-window fractions are max-of-n statistics and differ by
    # construction (~100 vs ~400 final cells), so the two scales are
    # compared over windows holding the same expected cell count: the
    # full unit torus for the 400 -> 100 run, a side-1/2 subsquare
    # (areas scaled by 4) for the 1600 -> 400 run.
    def run_down(n_target, resolution, r) -> CellMap:
        cells = _voronoi_cells(n_target, resolution, r)
        target = max(2, round(cells.live_count / 4))
        order = r.permutation(cells.live_ids)
        for pid in order:
            if cells.live_count <= target:
                break
            cells.merge_step(int(pid))
        return cells

    def largest_fraction(cells: CellMap, sub_half: float | None) -> float:
        best = 0.0
        total = cells.total_weight
        for pid, w in cells.weights.items():
            if sub_half is not None:
                x, y = cells.positions[pid]
                if abs(x - 0.5) > sub_half or abs(y - 0.5) > sub_half:
                    continue
            best = max(best, w / total)
        scale = 1.0 if sub_half is None else 1.0 / (2.0 * sub_half) ** 2
        return best * scale

    reps_ks = 150
    small = [
        largest_fraction(run_down(400.0, 128, rng.substream(20_000 + k)), None)
        for k in range(reps_ks)
    ]
    large = [
        largest_fraction(run_down(1600.0, 256, rng.substream(30_000 + k)), 0.25)
        for k in range(reps_ks)
    ]
    p_ks = float(sps.ks_2samp(small, large).pvalue)

    passed = conserved and p_thin > GOF_P and p_ks > GOF_P
    return _result(
        9,
        "partition-dynamics",
        start,
        passed,
        (
            f"conservation exact={conserved}, thinning GOF p={p_thin:.3g}, "
            f"two-scale KS p={p_ks:.3g}"
        ),
    )


# -- 10: measure convergence trend -----------------------------------------------------


def criterion_10_measure_convergence(seed: int = DEFAULT_SEED) -> CriterionResult:
    start = time.time()
    rng = RngStream(seed, 90)
    reps = 20
    ts = (2.0, 3.0, 4.0)
    sums = np.zeros(len(ts))
    for k in range(reps):
        f = None
        for attempt in range(50):
            r = rng.substream(1000 * k + attempt)
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")  # unit torus: ~1 root expected
                    f = grow_spacetime(0.0, 5.0, unit_torus(), r)
                break
            except ValueError:  # empty root generation; redraw
                continue
        root = 0
        for j, t in enumerate(ts):
            mu_a = f.empirical_measure(0.0, t, root)
            mu_b = f.empirical_measure(0.0, t + 1.0, root)
            d, _ = bl_distance(mu_a, mu_b, 24)
            sums[j] += d
    means = sums / reps
    decreasing = bool(means[0] > means[1] > means[2])
    return _result(
        10,
        "measure-convergence-trend",
        start,
        decreasing,
        "avg distances " + " > ".join(f"{m:.4f}" for m in means),
    )


# -- 11: dimension estimator -----------------------------------------------------------


def criterion_11_dimension_estimator(seed: int = DEFAULT_SEED) -> CriterionResult:
    start = time.time()
    rng = RngStream(seed, 100)

    segment = np.zeros((1024, 1024), dtype=bool)
    segment[512, :] = True
    seg = box_count_dimension(segment)
    filled = box_count_dimension(np.ones((1024, 1024), dtype=bool))
    single = np.zeros((64, 64), dtype=bool)
    single[10, 17] = True
    point = box_count_dimension(single)

    calib_ok = (
        seg.slope is not None
        and abs(seg.slope - 1.0) <= 0.05
        and filled.slope is not None
        and abs(filled.slope - 2.0) <= 0.05
        and point.slope is not None
        and abs(point.slope - 0.0) <= 0.05
    )

    f = grow_elementary(
        [((0.3, 0.3), 0), ((0.7, 0.7), 1)], 100_000, unit_square(), rng
    )
    raster = rasterize_voronoi(f, t1=1.0, resolution=1024)
    mask = boundary_mask(raster)
    res = box_count_dimension(mask)
    boundary_ok = (
        res.r2 >= 0.98 and res.slope is not None and 1.0 < res.slope < 2.0
    )

    def s(fit):
        return "none" if fit.slope is None else f"{fit.slope:.3f}"

    return _result(
        11,
        "dimension-estimator",
        start,
        calib_ok and boundary_ok,
        (
            f"segment={s(seg)}, filled={s(filled)}, point={s(point)}; "
            f"boundary slope={s(res)} r2={res.r2:.4f} (reported, no target value)"
        ),
    )


# -- 12: tail-fit calibration ------------------------------------------------------------


def criterion_12_tail_fit_calibration(seed: int = DEFAULT_SEED) -> CriterionResult:
    start = time.time()
    rng = RngStream(seed, 110)
    n = 10_000
    pareto = (1.0 - rng.random(n)) ** (-1.0 / 1.5)  # Pareto(alpha=1.5), min 1
    expo = rng.exponential(0.5, n)  # rate 2

    p_fit = power_tail_fit(pareto, 1.0)
    e_fit = exp_tail_fit(expo, 0.0)
    recover_ok = (
        abs(p_fit.exponent - 1.5) <= 3.0 * p_fit.se
        and abs(e_fit.exponent - 2.0) <= 3.0 * e_fit.se
    )

    right = (
        tail_fit_stability(pareto, 1.0, POWER).stable
        and tail_fit_stability(expo, 0.0, EXPONENTIAL).stable
    )
    swapped_flagged = (
        not tail_fit_stability(expo + 1.0, 1.0, POWER).stable
        and not tail_fit_stability(pareto, 1.0, EXPONENTIAL).stable
    )
    passed = recover_ok and right and swapped_flagged
    return _result(
        12,
        "tail-fit-calibration",
        start,
        passed,
        (
            f"power {p_fit.exponent:.3f}+-{p_fit.se:.3f} (1.5), "
            f"exp {e_fit.exponent:.3f}+-{e_fit.se:.3f} (2.0), "
            f"diagnostics right={right} swapped-flagged={swapped_flagged}"
        ),
    )


ALL_CRITERIA = (
    criterion_01_grid_exactness,
    criterion_02_poisson_laws,
    criterion_03_area_increment_law,
    criterion_04_geometric_inequalities,
    criterion_05_displacement_envelope,
    criterion_06_shot_noise,
    criterion_07_coalescence_tail,
    criterion_08_shared_nearest_bound,
    criterion_09_partition_dynamics,
    criterion_10_measure_convergence,
    criterion_11_dimension_estimator,
    criterion_12_tail_fit_calibration,
)


def run_criteria(
    numbers=None, seed: int = DEFAULT_SEED, echo=None
) -> list[CriterionResult]:
    wanted = set(numbers) if numbers else None
    results = []
    for i, fn in enumerate(ALL_CRITERIA, start=1):
        if wanted and i not in wanted:
            continue
        res = fn(seed)
        results.append(res)
        if echo:
            echo(res.line())
    return results
