import json
import math
from pathlib import Path

import numpy as np
import pytest

from planecolor.cli import main
from planecolor.config import load_config
from planecolor.reporting import read_csv_rows


def run(*argv):
    return main([str(a) for a in argv])


def test_color_elementary_outputs(tmp_path):
    out = tmp_path / "color"
    rc = run(
        "color", "--mode", "elementary", "--seeds", "0.3,0.3;0.7,0.7",
        "--n", 600, "--resolution", 64, "--seed", 3, "--out-dir", out,
    )
    assert rc == 0
    for name in (
        "forest.csv",
        "partition.ppm",
        "partition.png",
        "boundary_length.csv",
        "label_areas.csv",
    ):
        assert (out / name).exists(), name
    header, rows = read_csv_rows(out / "forest.csv")
    assert header == ["id", "t", "x", "y", "parent"]
    assert len(rows) == 600
    bheader, brows = read_csv_rows(out / "boundary_length.csv")
    assert bheader == ["n_particles", "resolution", "boundary_length"]
    assert len(brows) >= 3  # dyadic ladder
    ns = [int(r[0]) for r in brows]
    assert ns == sorted(ns)


def test_color_spacetime_outputs(tmp_path):
    out = tmp_path / "st"
    rc = run(
        "color", "--mode", "spacetime", "--t1", math.log(30), "--t2", math.log(300),
        "--resolution", 64, "--seed", 4, "--out-dir", out,
    )
    assert rc == 0
    header, rows = read_csv_rows(out / "forest.csv")
    assert len(rows) > 100


def test_ea_outputs(tmp_path):
    out = tmp_path / "ea"
    rc = run(
        "ea", "--until-t", 6, "--replicates", 3, "--chi-samples", 5000,
        "--level-b", 8, "--area-samples", 512, "--seed", 5, "--out-dir", out,
    )
    assert rc == 0
    header, rows = read_csv_rows(out / "traces" / "trace_0000.csv")
    assert header == ["step", "tau", "x", "y", "area_inc", "area_se", "diam"]
    taus = [float(r[1]) for r in rows]
    assert taus == sorted(taus)
    assert float(rows[-1][1]) >= 6.0
    assert (out / "envelope_tail.csv").exists()
    assert (out / "shotnoise.csv").exists()
    assert (out / "occupation.csv").exists()
    assert (out / "envelope_tail.png").exists()


def test_coalesce_outputs(tmp_path):
    out = tmp_path / "co"
    rc = run(
        "coalesce", "--separation", 1, "--t0", 0, "--replicates", 200,
        "--max-steps", 5000, "--seed", 6, "--out-dir", out,
    )
    assert rc == 0
    header, rows = read_csv_rows(out / "coalescence.csv")
    assert header == [
        "run_id", "seed", "separation", "t0", "T_coal", "I_coal", "zx", "zy", "censored",
    ]
    assert len(rows) == 200
    fheader, frows = read_csv_rows(out / "tail_fits.csv")
    assert {r[0] for r in frows} == {
        "coalescence_time_rate",
        "meeting_distance_exponent",
    }
    assert (out / "meeting_distance_tail.png").exists()


def test_merge_outputs(tmp_path):
    out = tmp_path / "merge"
    rc = run(
        "merge", "--t-from", 5.0, "--t-to", 3.9, "--n-init", 150,
        "--resolution", 64, "--snapshot-times", "4.5", "--seed", 7, "--out-dir", out,
    )
    assert rc == 0
    header, rows = read_csv_rows(out / "merge_log.csv")
    assert header == ["time", "deleted", "absorber", "area"]
    times = [float(r[0]) for r in rows]
    assert times == sorted(times, reverse=True)
    aheader, arows = read_csv_rows(out / "area_profile.csv")
    fracs = [float(r[1]) for r in arows]
    assert sum(fracs) == pytest.approx(1.0)
    assert fracs == sorted(fracs, reverse=True)
    assert (out / "snapshot_t4.5.ppm").exists()
    assert (out / "final.ppm").exists()


def test_dim_on_written_raster(tmp_path):
    color_out = tmp_path / "c"
    run(
        "color", "--mode", "elementary", "--seeds", "0.25,0.5;0.75,0.5",
        "--n", 2000, "--resolution", 256, "--seed", 8, "--out-dir", color_out,
    )
    out = tmp_path / "dim"
    rc = run("dim", "--input-ppm", color_out / "partition.ppm", "--out-dir", out)
    assert rc == 0
    header, rows = read_csv_rows(out / "boxcount.csv")
    assert header == ["scale", "count"]
    counts = [int(r[1]) for r in rows]
    assert counts == sorted(counts, reverse=True)
    assert (out / "boxcount.png").exists()


def test_verify_subset(tmp_path):
    out = tmp_path / "verify"
    rc = run("verify", "--criteria", "2,12", "--out-dir", out)
    assert rc == 0
    header, rows = read_csv_rows(out / "verify_report.csv")
    assert header == ["criterion", "name", "passed", "details"]
    assert [int(r[0]) for r in rows] == [2, 12]
    assert all(int(r[2]) == 1 for r in rows)


def test_csv_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        run(
            "coalesce", "--separation", 1, "--replicates", 40,
            "--seed", 11, "--out-dir", out,
        )
    assert (a / "coalescence.csv").read_bytes() == (b / "coalescence.csv").read_bytes()
    assert (a / "tail_fits.csv").read_bytes() == (b / "tail_fits.csv").read_bytes()


def test_config_file_merging(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(
        json.dumps(
            {
                "common": {"seed": 21},
                "color": {"mode": "elementary", "n": 300, "resolution": 32},
            }
        )
    )
    out1 = tmp_path / "o1"
    rc = run("--config", cfg, "color", "--out-dir", out1)
    assert rc == 0
    _, rows = read_csv_rows(out1 / "forest.csv")
    assert len(rows) == 300
    # explicit flag beats the config value
    out2 = tmp_path / "o2"
    run("--config", cfg, "color", "--n", 400, "--out-dir", out2)
    _, rows2 = read_csv_rows(out2 / "forest.csv")
    assert len(rows2) == 400


def test_config_schema_rejects_unknown(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"color": {"bogus_knob": 1}}))
    with pytest.raises(Exception):
        load_config(cfg)


def test_no_command_prints_help():
    assert run() == 2
