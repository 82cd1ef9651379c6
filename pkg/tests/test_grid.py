import math

import numpy as np
import pytest

from planecolor import GridIndex, RngStream, brute_force_nearest, unit_square, unit_torus


def test_single_point():
    idx = GridIndex(unit_square())
    idx.insert(0, 0.0, 0.0)
    pid, d = idx.nearest((5.0, 5.0))
    assert pid == 0
    assert d == pytest.approx(5 * math.sqrt(2))


def test_torus_wraparound():
    idx = GridIndex(unit_torus())
    idx.insert(0, 0.05, 0.5)
    pid, d = idx.nearest((0.95, 0.5))
    assert pid == 0
    assert d == pytest.approx(0.10)


def test_empty_and_exclude():
    idx = GridIndex(unit_torus())
    assert idx.nearest((0.5, 0.5)) is None
    idx.insert(1, 0.1, 0.1)
    assert idx.nearest((0.5, 0.5), exclude=1) is None


@pytest.mark.parametrize("window", [unit_torus(), unit_square()])
def test_matches_brute_force(window):
    rng = RngStream(7, 0)
    pts = rng.uniform(0, 1, (800, 2))
    idx = GridIndex(window)
    for i, (x, y) in enumerate(pts):
        idx.insert(i, float(x), float(y))
    for q in rng.uniform(0, 1, (1500, 2)):
        assert idx.nearest(q) == brute_force_nearest(pts, q, window)


def test_mutation_errors():
    idx = GridIndex(unit_torus())
    idx.insert(0, 0.5, 0.5)
    with pytest.raises(ValueError):
        idx.insert(0, 0.4, 0.4)
    with pytest.raises(ValueError):
        idx.remove(99)


def test_insert_remove_roundtrip():
    idx = GridIndex(unit_torus())
    idx.insert(0, 0.2, 0.2)
    idx.insert(1, 0.8, 0.8)
    idx.insert(2, 0.5, 0.5)
    idx.remove(2)
    assert sorted(dict(idx.items())) == [0, 1]
    assert idx.nearest((0.5, 0.5))[0] in (0, 1)


def test_removal_promotes_second_nearest():
    window = unit_torus()
    rng = RngStream(8, 0)
    pts = rng.uniform(0, 1, (200, 2))
    idx = GridIndex(window)
    for i, (x, y) in enumerate(pts):
        idx.insert(i, float(x), float(y))
    for q in rng.uniform(0, 1, (100, 2)):
        first, _ = idx.nearest(q)
        idx.remove(first)
        keep = np.arange(200) != first
        want = brute_force_nearest(pts[keep], q, window, ids=np.arange(200)[keep])
        assert idx.nearest(q) == want
        idx.insert(first, float(pts[first, 0]), float(pts[first, 1]))


def test_interleaved_against_reference_model():
    # 1e4 random inserts/removes tracked against a dict reference
    window = unit_torus()
    rng = RngStream(9, 0)
    idx = GridIndex(window)
    live = {}
    next_id = 0
    ops = rng.random(10_000)
    coords = rng.uniform(0, 1, (10_000, 2))
    removal_pick = rng.integers(0, 2**31, 10_000)
    for i in range(10_000):
        if live and ops[i] < 0.45:
            pid = sorted(live)[removal_pick[i] % len(live)]
            idx.remove(pid)
            del live[pid]
        else:
            x, y = float(coords[i, 0]), float(coords[i, 1])
            idx.insert(next_id, x, y)
            live[next_id] = (x, y)
            next_id += 1
    assert dict(idx.items()) == live
    if live:
        pts = np.array(list(live.values()))
        ids = np.array(sorted(live))
        pts = np.array([live[i] for i in ids])
        q = (0.37, 0.61)
        assert idx.nearest(q) == brute_force_nearest(pts, q, window, ids=ids)


def test_rebuild_keeps_exactness():
    # grow through several rebuild thresholds, checking along the way
    window = unit_torus()
    rng = RngStream(10, 0)
    idx = GridIndex(window)
    pts = []
    for i in range(3000):
        x, y = (float(v) for v in rng.uniform(0, 1, 2))
        idx.insert(i, x, y)
        pts.append((x, y))
        if i in (3, 40, 400, 2500):
            q = rng.uniform(0, 1, 2)
            assert idx.nearest(q) == brute_force_nearest(np.array(pts), q, window)
