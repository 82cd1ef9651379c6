import math

import numpy as np
import pytest
import scipy.stats as sps

from planecolor import (
    CellMap,
    RngStream,
    cell_area_profile,
    grow_spacetime,
    init_cells,
    rasterize_voronoi,
    reverse_run,
    unit_torus,
)
from planecolor.merging import snapshot_labels
from planecolor.stats import chisq_count_gof


def voronoi_cells(n_expected, resolution, rng):
    t1 = math.log(n_expected)
    f = grow_spacetime(t1, t1, unit_torus(), rng)
    raster = rasterize_voronoi(f, t1, resolution)
    return f, raster, init_cells(f, t1, raster)


def test_init_cells_weights():
    rng = RngStream(1, 0)
    f, raster, cells = voronoi_cells(60, 64, rng)
    assert cells.live_count == f.n_roots
    assert cells.total_weight == 64 * 64  # integer pixel units
    assert cells.total_area == pytest.approx(1.0)
    for pid, w in cells.weights.items():
        assert w == int(w) >= 0
    # weights match the raster label table
    counts = raster.label_pixel_counts()
    for pid, c in counts.items():
        assert cells.weights[pid] == c


def test_init_cells_label_mismatch():
    rng = RngStream(2, 0)
    f, raster, _ = voronoi_cells(30, 32, rng)
    f2, raster2, _ = voronoi_cells(30, 32, rng.substream(1))
    with pytest.raises(ValueError):
        init_cells(f2, f2.root_time, raster)  # labels from a different forest


def test_single_root_cell():
    w = unit_torus()
    cells = CellMap(w, np.array([7]), np.array([[0.5, 0.5]]), np.array([16.0]))
    assert cell_area_profile(cells) == [(7, 1.0)]
    with pytest.raises(ValueError):
        cells.merge_step(7)  # cannot delete the last particle


def test_two_particles_merge():
    w = unit_torus()
    cells = CellMap(
        w, np.array([0, 1]), np.array([[0.2, 0.2], [0.8, 0.8]]), np.array([10.0, 6.0])
    )
    ev = cells.merge_step(0, time=3.0)
    assert ev.deleted == 0 and ev.absorber == 1
    assert ev.area == 10.0
    assert cells.weights == {1: 16.0}
    assert cells.live_count == 1


def test_collinear_absorber():
    w = unit_torus()
    cells = CellMap(
        w,
        np.array([0, 1, 2]),
        np.array([[0.10, 0.5], [0.20, 0.5], [0.40, 0.5]]),
        np.ones(3),
    )
    ev = cells.merge_step(1)
    assert ev.absorber == 0  # distance 0.1 < 0.2


def test_absorber_matches_brute_force():
    rng = RngStream(3, 0)
    w = unit_torus()
    for trial in range(50):
        r = rng.substream(trial)
        n = 40
        pts = r.uniform(0, 1, (n, 2))
        cells = CellMap(w, np.arange(n), pts, np.ones(n))
        order = r.permutation(n)
        alive = set(range(n))
        for pid in order[: n - 1]:
            pid = int(pid)
            alive.discard(pid)
            d = w.distances(pts[sorted(alive)], pts[pid])
            ids = np.array(sorted(alive))
            want = int(ids[np.lexsort((ids, d))[0]])
            ev = cells.merge_step(pid)
            assert ev.absorber == want


def test_weight_conservation_exact():
    rng = RngStream(4, 0)
    _, _, cells = voronoi_cells(80, 64, rng)
    total = cells.total_weight
    order = rng.permutation(cells.live_ids)
    for pid in order[:-1]:
        cells.merge_step(int(pid))
        assert cells.total_weight == total  # integer arithmetic, exact


def test_reverse_run_semantics():
    rng = RngStream(5, 0)
    w = unit_torus()
    n = 50
    pts = RngStream(5, 1).uniform(0, 1, (n, 2))
    cells = CellMap(w, np.arange(n), pts, np.ones(n))
    final, events = reverse_run(cells, 4.0, 2.0, rng)
    # events are in decreasing time order and stay inside (2, 4]
    times = [ev.time for ev in events]
    assert all(a >= b for a, b in zip(times, times[1:]))
    assert all(2.0 < t <= 4.0 for t in times)
    assert final.live_count == n - len(events)
    with pytest.raises(ValueError):
        reverse_run(final, 2.0, 2.0, rng)


def test_reverse_run_stops_at_one():
    rng = RngStream(6, 0)
    w = unit_torus()
    pts = RngStream(6, 1).uniform(0, 1, (5, 2))
    cells = CellMap(w, np.arange(5), pts, np.ones(5))
    final, events = reverse_run(cells, 10.0, -100.0, rng)
    assert final.live_count == 1
    assert len(events) == 4
    assert cell_area_profile(final)[0][1] == pytest.approx(1.0)


def test_survivor_counts_binomial():
    rng = RngStream(7, 0)
    w = unit_torus()
    n, delta = 60, math.log(2.0)
    survivors = []
    for k in range(400):
        r = rng.substream(k)
        pts = r.uniform(0, 1, (n, 2))
        cells = CellMap(w, np.arange(n), pts, np.ones(n))
        final, _ = reverse_run(cells, delta, 0.0, r)
        survivors.append(final.live_count)
    assert chisq_count_gof(survivors, sps.binom(n, 0.5)) > 0.001


def test_reverse_merge_consistent_with_direct_construction():
    # Central consistency claim: carrying descendant-count masses, the
    # reversed merge of the time-t1 cells down to t1' has exactly the law
    # of the masses built directly from a (t1', t2) forest.  Lifetimes of
    # the t1 particles are i.i.d. Exp(1) given positions, and each deleted
    # particle's mass joins its nearest survivor, which is its parent.
    rng = RngStream(9, 0)
    t1p, t1, t2 = math.log(25.0), math.log(100.0), math.log(800.0)
    direct, merged = [], []
    for k in range(120):
        fa = grow_spacetime(t1p, t2, unit_torus(), rng.substream(2 * k))
        counts_a = np.bincount(fa.root, minlength=fa.n_roots)[: fa.n_roots]
        direct.append(counts_a.max() / counts_a.sum())

        fb = grow_spacetime(t1, t2, unit_torus(), rng.substream(2 * k + 1))
        counts_b = np.bincount(fb.root, minlength=fb.n_roots)[: fb.n_roots]
        cells = CellMap(
            fb.window,
            np.arange(fb.n_roots),
            fb.xy[: fb.n_roots],
            counts_b.astype(float),
        )
        final, _ = reverse_run(cells, t1, t1p, rng.substream(10**6 + k))
        merged.append(max(final.weights.values()) / final.total_weight)
    assert sps.ks_2samp(direct, merged).pvalue > 0.001


def test_snapshot_labels_replay():
    rng = RngStream(8, 0)
    f, raster, cells = voronoi_cells(40, 32, rng)
    t_from = f.root_time
    final, events = reverse_run(cells, t_from, t_from - 1.0, rng.substream(1))
    # snapshot before anything happened: original labels
    before = snapshot_labels(raster, events, t_from + 0.1)
    assert np.array_equal(before, raster.labels)
    # snapshot at the end matches the final owner mapping
    after = snapshot_labels(raster, events, t_from - 1.0)
    assert np.array_equal(after, final.relabel(raster))
    assert set(np.unique(after)) == set(final.live_ids)
