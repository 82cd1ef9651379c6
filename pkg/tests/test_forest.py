import math
import warnings

import numpy as np
import pytest
import scipy.stats as sps

from planecolor import RngStream, grow_elementary, grow_spacetime, unit_square, unit_torus


def two_seed_square(n, seed=0):
    return grow_elementary(
        [((0.0, 0.0), 10), ((1.0, 1.0), 20)], n, unit_square(), RngStream(seed, 0)
    )


def test_elementary_validation():
    with pytest.raises(ValueError):
        grow_elementary([((0, 0), 1)], 5, unit_square(), RngStream(0, 0))
    with pytest.raises(ValueError):
        grow_elementary(
            [((0, 0), 1), ((0, 0), 2)], 5, unit_square(), RngStream(0, 0)
        )
    with pytest.raises(ValueError):
        grow_elementary(
            [((0, 0), 1), ((1, 1), 2)], 1, unit_square(), RngStream(0, 0)
        )
    with pytest.raises(ValueError):
        grow_elementary(
            [((0, 0), 1), ((1, 1), 2)], 5, unit_torus(), RngStream(0, 0)
        )


def test_elementary_first_arrival_colors():
    # the first arrival parents to whichever seed is closer and takes its
    # color; e.g. (0.1, 0.2) belongs to the origin seed, (0.6, 0.6) to the
    # far one (0.224 < 1.204 and 0.566 < 0.849)
    f = two_seed_square(50)
    assert f.color[0] == 10 and f.color[1] == 20
    first = f.xy[2]
    d0 = math.dist(first, f.xy[0])
    d1 = math.dist(first, f.xy[1])
    expect_parent = 0 if d0 < d1 else 1
    assert f.parent[2] == expect_parent
    assert f.color[2] == f.color[expect_parent]


def test_elementary_parent_is_nearest_earlier():
    f = two_seed_square(1000, seed=3)
    for i in range(f.n_roots, len(f)):
        d = f.window.distances(f.xy[:i], f.xy[i])
        want = int(np.lexsort((np.arange(i), d))[0])
        assert int(f.parent[i]) == want
        assert f.t[f.parent[i]] < f.t[i]
        assert f.color[i] == f.color[f.parent[i]]


def test_color_fractions_sum_to_one():
    f = two_seed_square(500, seed=4)
    for m in (2, 10, 100, 500):
        sub = f.color[:m]
        frac = sum(np.mean(sub == c) for c in (10, 20))
        assert frac == pytest.approx(1.0)


def test_spacetime_counts_and_parent_rule():
    rng = RngStream(5, 0)
    t1, t2 = math.log(50.0), math.log(500.0)
    f = grow_spacetime(t1, t2, unit_torus(), rng)
    assert f.n_roots > 10  # ~50
    assert len(f) > 300  # ~500
    assert np.all(f.parent[: f.n_roots] == -1)
    for i in range(f.n_roots, min(len(f), 400)):
        d = f.window.distances(f.xy[:i], f.xy[i])
        want = int(np.lexsort((np.arange(i), d))[0])
        assert int(f.parent[i]) == want


def test_spacetime_degenerate_warns():
    with pytest.warns(UserWarning):
        try:
            grow_spacetime(0.0, 0.5, unit_torus(), RngStream(1, 0))
        except ValueError:
            pass  # zero roots is a legitimate draw at intensity 1


def test_parent_distance_scaling():
    # median parent distance at birth time s scales like e^{-s/2}:
    # raising s by ln 4 halves it
    rng = RngStream(6, 0)
    t1 = math.log(100.0)
    s_lo, s_hi = t1 + 0.3, t1 + 0.3 + math.log(4.0)
    f = grow_spacetime(t1, s_hi + 0.1, unit_torus(), rng)
    d_parent = np.array(
        [
            f.window.distance(f.xy[i], f.xy[f.parent[i]])
            for i in range(f.n_roots, len(f))
        ]
    )
    births = f.t[f.n_roots :]
    lo = np.median(d_parent[(births >= s_lo) & (births < s_lo + 0.1)])
    hi = np.median(d_parent[(births >= s_hi) & (births < s_hi + 0.1)])
    assert lo / hi == pytest.approx(2.0, rel=0.25)


def test_ancestor_walk():
    f = two_seed_square(400, seed=7)
    # own ancestor at or after birth
    assert f.ancestor(f.t[50], 50) == 50
    assert f.ancestor(1e9, 50) == 50
    # explicit chain walk oracle
    for i in (10, 100, 399):
        for t in (-1.0, 0.0, 1.0, 5.5, 200.0):
            j = i
            while f.t[j] > t and f.parent[j] >= 0:
                j = int(f.parent[j])
            assert f.ancestor(t, i) == j
    # before the roots: returns the root
    assert f.ancestor(-100.0, 399) in (0, 1)


def test_descend_partitions():
    rng = RngStream(8, 0)
    t1, t2 = math.log(30.0), math.log(300.0)
    f = grow_spacetime(t1, t2, unit_torus(), rng)
    t_mid = (t1 + t2) / 2
    anc = f.ancestors_at(t_mid)
    mids = np.flatnonzero(f.t <= t_mid)
    seen = set()
    total = 0
    for root in mids:
        ids = f.descend(t_mid, t2, int(root))
        if f.t[root] > t_mid:
            continue
        ids_set = set(int(v) for v in ids)
        assert not (seen & ids_set)
        seen |= ids_set
        total += len(ids_set)
        # brute-force classification
        want = {int(i) for i in range(len(f)) if anc[i] == root and f.t[i] <= t2}
        assert ids_set == want
    assert total == len(f)  # partition of everything born before t2
    # descend at t2 == t1 is just the root itself
    assert set(f.descend(t_mid, t_mid, int(mids[0]))) == {int(mids[0])}
    with pytest.raises(ValueError):
        f.descend(t1 - 5.0, t2, int(np.flatnonzero(f.t > t1 - 5.0)[0]) + f.n_roots)


def test_empirical_measure_mass():
    rng = RngStream(9, 0)
    t1, t2 = math.log(40.0), math.log(200.0)
    f = grow_spacetime(t1, t2, unit_torus(), rng)
    masses = []
    for root in range(f.n_roots):
        mu = f.empirical_measure(t1, t2, root)
        assert mu.total_mass == pytest.approx(
            math.exp(-t2) * len(f.descend(t1, t2, root))
        )
        masses.append(mu.total_mass)
    assert sum(masses) == pytest.approx(math.exp(-t2) * len(f))


def test_empirical_measure_unit_spatial_average():
    # average total mass per unit area is 1 over replicates
    rng = RngStream(10, 0)
    t1, t2 = math.log(30.0), math.log(120.0)
    vals = []
    for k in range(150):
        f = grow_spacetime(t1, t2, unit_torus(), rng.substream(k))
        vals.append(math.exp(-t2) * len(f) / f.window.area)
    m = np.mean(vals)
    se = np.std(vals, ddof=1) / math.sqrt(len(vals))
    assert abs(m - 1.0) <= 3 * se


def test_displacement_samples():
    rng = RngStream(11, 0)
    t1, t2 = math.log(60.0), math.log(60.0) + 2.0
    f = grow_spacetime(t1, t2, unit_torus(), rng)
    zero = f.ancestor_displacement_samples(t2, t2)
    assert np.all(zero == 0.0)
    disp = f.ancestor_displacement_samples(t2, t1)
    assert len(disp) == len(f)
    assert np.all(disp[: f.n_roots] == 0.0)
    assert np.max(disp) <= math.sqrt(0.5) + 1e-12  # torus metric cap


def test_displacement_self_similarity():
    # e^{t0/2}-scaled displacement law is invariant when both times shift
    rng = RngStream(12, 0)
    gap = 2.0
    samples = {}
    for shift in (0.0, 2.0):
        t0 = math.log(200.0) + shift
        pooled = []
        for k in range(8):
            f = grow_spacetime(
                t0, t0 + gap, unit_torus(), rng.substream(int(shift * 100) + k)
            )
            disp = f.ancestor_displacement_samples(t0 + gap, t0)
            pooled.extend(math.exp(t0 / 2.0) * disp[f.n_roots :])
        samples[shift] = np.asarray(pooled)
    p = sps.ks_2samp(samples[0.0], samples[2.0]).pvalue
    assert p > 0.001


def test_prefix_and_csv_roundtrip(tmp_path):
    f = two_seed_square(100, seed=13)
    sub = f.prefix(50)
    assert len(sub) == 50
    assert np.array_equal(sub.parent, f.parent[:50])
    path = tmp_path / "forest.csv"
    f.to_csv(path, metadata="seed=13")
    lines = path.read_text().splitlines()
    assert lines[0].startswith("#")
    assert lines[1] == "id,t,x,y,parent"
    assert len(lines) == 2 + len(f)
    root_row = lines[2].split(",")
    assert root_row[-1] == ""  # roots have no parent
