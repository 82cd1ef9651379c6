"""Command-line interface.

Subcommands: ``color`` (coloring forests and rasters), ``ea`` (ancestor
chain traces, displacement-envelope tail, shot noise), ``coalesce``
(coupled-chain ensembles and tail fits), ``merge`` (reversed-time cell
merging), ``dim`` (box-counting dimension of a raster boundary) and
``verify`` (the acceptance suite).

Every flag can come from a JSON config file (``--config``); explicit
flags override file values.  All CSV outputs carry the seed, config hash
and version, and are byte-identical across reruns of the same
config+seed.  Figures (PNG) are rendered next to the delimited output.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import load_config, merge_options
from .coupled import coupled_init, coupled_run
from .excluded_area import (
    AREA_KIND,
    DIAMETER_KIND,
    chain_init,
    chain_step,
    envelope_tail,
    occupation_bad_fraction,
    run_until_time,
    sample_displacement_envelope_batch,
    shot_noise_run,
)
from .forest import grow_elementary, grow_spacetime
from .merging import cell_area_profile, init_cells, reverse_run, snapshot_labels
from .raster import (
    PartitionRaster,
    boundary_length,
    boundary_mask,
    labels_to_rgb,
    rasterize_voronoi,
    read_ppm,
    rgb_to_labels,
    write_ppm,
)
from .reporting import (
    config_hash,
    metadata_line,
    save_boxcount_figure,
    save_partition_figure,
    save_path_figure,
    save_scaling_figure,
    save_survival_figure,
    write_csv,
)
from .rng import RngStream
from .stats import (
    EXPONENTIAL,
    POWER,
    bootstrap_ci,
    box_count_dimension,
    exp_tail_fit,
    power_tail_fit,
    tail_fit_stability,
)
from .windows import Window, unit_square, unit_torus
from .acceptance import run_criteria


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 2
    cfg = load_config(args.config) if args.config else {}
    handler = {
        "color": cmd_color,
        "ea": cmd_ea,
        "coalesce": cmd_coalesce,
        "merge": cmd_merge,
        "dim": cmd_dim,
        "verify": cmd_verify,
    }[args.command]
    return handler(args, cfg)


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="planecolor",
        description="Nearest-neighbor coloring of the plane: simulation and estimation",
    )
    p.add_argument("--version", action="version", version=f"planecolor {__version__}")
    p.add_argument("--config", help="JSON config file (flags override it)")
    sub = p.add_subparsers(dest="command")

    c = sub.add_parser("color", help="coloring forest, raster, boundary lengths")
    c.add_argument("--mode", choices=["elementary", "spacetime"])
    c.add_argument("--seeds", help="elementary seeds 'x,y[,color];x,y[,color];...'")
    c.add_argument("--n", type=int, help="total particles (elementary mode)")
    c.add_argument("--t1", type=float, help="root-generation time (spacetime)")
    c.add_argument("--t2", type=float, help="final time (spacetime)")
    c.add_argument("--resolution", type=int)
    c.add_argument("--seed", type=int)
    c.add_argument("--out-dir")

    e = sub.add_parser("ea", help="ancestor-chain traces, envelope tail, shot noise")
    e.add_argument("--steps", type=int, help="steps per chain (exclusive with --until-t)")
    e.add_argument("--until-t", type=float, help="run each chain until tau exceeds this")
    e.add_argument("--replicates", type=int)
    e.add_argument("--chi-samples", type=int, help="displacement-envelope sample count")
    e.add_argument("--level-b", type=float, help="occupation level")
    e.add_argument("--area-samples", type=int, help="Monte Carlo points per area increment")
    e.add_argument("--shot-t", type=float, help="shot-noise horizon")
    e.add_argument("--seed", type=int)
    e.add_argument("--out-dir")

    co = sub.add_parser("coalesce", help="coupled-chain ensemble and tail fits")
    co.add_argument("--separation", type=float)
    co.add_argument("--t0", type=float)
    co.add_argument("--replicates", type=int)
    co.add_argument("--max-steps", type=int)
    co.add_argument("--seed", type=int)
    co.add_argument("--out-dir")

    m = sub.add_parser("merge", help="reversed-time partition run")
    m.add_argument("--t-from", type=float)
    m.add_argument("--t-to", type=float)
    m.add_argument("--n-init", type=int, help="expected initial particle count")
    m.add_argument("--resolution", type=int)
    m.add_argument("--snapshot-times", help="comma-separated times for raster snapshots")
    m.add_argument("--seed", type=int)
    m.add_argument("--out-dir")

    d = sub.add_parser("dim", help="box-counting dimension of a raster boundary")
    d.add_argument("--input-ppm", required=False)
    d.add_argument("--scales", help="comma-separated box sizes (default dyadic)")
    d.add_argument("--out-dir")

    v = sub.add_parser("verify", help="run the acceptance suite")
    v.add_argument("--criteria", help="comma-separated criterion numbers (default all)")
    v.add_argument("--seed", type=int)
    v.add_argument("--out-dir")
    return p


def _options(args, cfg: dict, section: str, defaults: dict) -> dict:
    cli = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    merged = merge_options(defaults, cfg.get(section, {}), cli)
    common = cfg.get("common", {})
    for key in ("seed", "out_dir"):
        if merged.get(key) is None and key in common:
            merged[key] = common[key]
    if merged.get("seed") is None:
        merged["seed"] = 0
    if merged.get("out_dir") is None:
        merged["out_dir"] = "out"
    return merged


def _window(cfg: dict, fallback: Window) -> Window:
    wc = cfg.get("common", {}).get("window")
    if not wc:
        return fallback
    return Window(
        wc.get("x_min", 0.0),
        wc.get("x_max", 1.0),
        wc.get("y_min", 0.0),
        wc.get("y_max", 1.0),
        wc.get("topology", "torus"),
    )


def _parse_seeds(text: str):
    seeds = []
    for i, part in enumerate(text.split(";")):
        fields = part.split(",")
        if len(fields) not in (2, 3):
            raise SystemExit(f"bad seed entry {part!r}: want 'x,y' or 'x,y,color'")
        x, y = float(fields[0]), float(fields[1])
        color = int(fields[2]) if len(fields) == 3 else i
        seeds.append(((x, y), color))
    return seeds


# -- color ----------------------------------------------------------------------


def cmd_color(args, cfg) -> int:
    opt = _options(
        args,
        cfg,
        "color",
        {
            "mode": "spacetime",
            "seeds": "0.3,0.3;0.7,0.7",
            "n": 20_000,
            "t1": math.log(50.0),
            "t2": math.log(5000.0),
            "resolution": 512,
        },
    )
    out = Path(opt["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    meta = metadata_line(opt["seed"], config_hash(opt))
    rng = RngStream(opt["seed"], 0)

    if opt["mode"] == "elementary":
        window = _window(cfg, unit_square())
        forest = grow_elementary(_parse_seeds(opt["seeds"]), opt["n"], window, rng)
        t1 = forest.root_time
    else:
        window = _window(cfg, unit_torus())
        forest = grow_spacetime(opt["t1"], opt["t2"], window, rng)
        t1 = opt["t1"]

    forest.to_csv(out / "forest.csv", metadata=meta)
    raster = rasterize_voronoi(forest, t1, opt["resolution"])
    write_ppm(raster, out / "partition.ppm")
    save_partition_figure(
        labels_to_rgb(raster.labels),
        out / "partition.png",
        title=f"{opt['mode']} coloring, {len(forest)} particles",
    )
    areas = raster.label_areas()
    write_csv(
        out / "label_areas.csv",
        ["label", "area"],
        sorted(areas.items()),
        metadata=meta,
    )

    rows = []
    if opt["mode"] == "elementary":
        ladder = []
        m = len(forest)
        while m >= max(2 * forest.n_roots, 16):
            ladder.append(m)
            m //= 2
        for m in sorted(ladder):
            sub = forest.prefix(m)
            sub_raster = rasterize_voronoi(sub, t1, opt["resolution"])
            rows.append((m, opt["resolution"], boundary_length(sub_raster)))
    else:
        rows.append((len(forest), opt["resolution"], boundary_length(raster)))
    write_csv(
        out / "boundary_length.csv",
        ["n_particles", "resolution", "boundary_length"],
        rows,
        metadata=meta,
    )
    if len(rows) > 2:
        ns = np.array([r[0] for r in rows], dtype=float)
        ls = np.array([r[2] for r in rows], dtype=float)
        save_scaling_figure(
            ns,
            ls,
            out / "boundary_scaling.png",
            "particles n",
            "boundary length",
            "boundary length vs n (slope ~ d/2 on log-log)",
        )
    print(f"color: {len(forest)} particles -> {out}")
    return 0


# -- ea -------------------------------------------------------------------------


def cmd_ea(args, cfg) -> int:
    opt = _options(
        args,
        cfg,
        "ea",
        {
            "steps": None,
            "until_t": None,
            "replicates": 20,
            "chi_samples": 100_000,
            "level_b": 8.0,
            "area_samples": 4096,
            "shot_t": 1000.0,
        },
    )
    if opt["steps"] is None and opt["until_t"] is None:
        opt["steps"] = 30
    out = Path(opt["out_dir"])
    (out / "traces").mkdir(parents=True, exist_ok=True)
    meta = metadata_line(opt["seed"], config_hash(opt))
    rng = RngStream(opt["seed"], 0)

    occ_rows = []
    for k in range(opt["replicates"]):
        r = rng.substream(k)
        s = chain_init((0.0, 0.0), r)
        if opt["until_t"] is not None:
            s = run_until_time(s, opt["until_t"], r, area_samples=opt["area_samples"])
        else:
            for _ in range(opt["steps"]):
                s = chain_step(s, r, area_samples=opt["area_samples"])
        write_csv(
            out / "traces" / f"trace_{k:04d}.csv",
            ["step", "tau", "x", "y", "area_inc", "area_se", "diam"],
            (
                (row.step, row.tau, row.x, row.y, row.area_inc, row.area_inc_se, row.diam)
                for row in s.trace
            ),
            metadata=meta,
        )
        if opt["until_t"] is not None:
            occ_rows.append(
                (
                    k,
                    opt["level_b"],
                    opt["until_t"],
                    occupation_bad_fraction(s.trace, opt["level_b"], opt["until_t"]),
                )
            )
    if occ_rows:
        write_csv(
            out / "occupation.csv",
            ["run_id", "level_b", "duration", "bad_fraction"],
            occ_rows,
            metadata=meta,
        )

    if opt["chi_samples"] > 0:
        env = sample_displacement_envelope_batch(opt["chi_samples"], rng.substream(10**6))
        rs = [0.125 * 2**j for j in range(10)]
        tail = envelope_tail(env, rs)
        write_csv(
            out / "envelope_tail.csv",
            ["r", "survival", "se"],
            tail,
            metadata=f"{meta} mean={env.mean()!r}",
        )
        save_survival_figure(
            env,
            out / "envelope_tail.png",
            "scaled displacement bound",
            f"envelope tail, mean={env.mean():.3f}",
        )

    sn_rows = []
    for kind, stream in ((AREA_KIND, 2 * 10**6), (DIAMETER_KIND, 3 * 10**6)):
        summary = shot_noise_run(
            kind, opt["shot_t"], rng.substream(stream), levels=(opt["level_b"],)
        )
        sn_rows.append(
            (
                kind,
                summary.duration,
                summary.mean,
                opt["level_b"],
                summary.occupation[opt["level_b"]],
            )
        )
        save_path_figure(
            summary.grid_t,
            summary.grid_x,
            out / f"shotnoise_{kind}.png",
            f"{kind} shot noise, mean={summary.mean:.3f}",
        )
    write_csv(
        out / "shotnoise.csv",
        ["kind", "duration", "mean", "level_b", "occupation_fraction"],
        sn_rows,
        metadata=meta,
    )
    print(f"ea: {opt['replicates']} chains -> {out}")
    return 0


# -- coalesce ---------------------------------------------------------------------


def cmd_coalesce(args, cfg) -> int:
    opt = _options(
        args,
        cfg,
        "coalesce",
        {"separation": 1.0, "t0": 0.0, "replicates": 2000, "max_steps": 10_000},
    )
    out = Path(opt["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    meta = metadata_line(opt["seed"], config_hash(opt))
    rng = RngStream(opt["seed"], 0)
    d = opt["separation"]

    rows = []
    t_coal = np.empty(opt["replicates"])
    censored = np.zeros(opt["replicates"], dtype=bool)
    z_norm = []
    for k in range(opt["replicates"]):
        r = rng.substream(k)
        s = coupled_init((-d / 2.0, 0.0), (d / 2.0, 0.0), opt["t0"], r)
        rec = coupled_run(s, opt["max_steps"], r)
        t_coal[k] = rec.t_coal
        censored[k] = rec.censored
        zx, zy = (rec.z_coal if rec.z_coal is not None else (None, None))
        if rec.z_coal is not None:
            z_norm.append(math.hypot(zx, zy))
        rows.append(
            (
                k,
                opt["seed"],
                d,
                opt["t0"],
                rec.t_coal,
                rec.i_coal,
                zx,
                zy,
                int(rec.censored),
            )
        )
    write_csv(
        out / "coalescence.csv",
        ["run_id", "seed", "separation", "t0", "T_coal", "I_coal", "zx", "zy", "censored"],
        rows,
        metadata=meta,
    )

    fit_rows = []
    t_thresh = float(np.quantile(t_coal[~censored], 0.5))
    rho = exp_tail_fit(t_coal, t_thresh, censored=censored)
    rho_stab = tail_fit_stability(t_coal, t_thresh, EXPONENTIAL, censored=censored)
    fit_rows.append(
        (
            "coalescence_time_rate",
            rho.exponent,
            rho.se,
            rho.threshold,
            rho.n_used,
            rho.n_censored,
            int(rho_stab.stable),
            "",
            "",
        )
    )
    z_arr = np.asarray(z_norm)
    z_arr = z_arr[z_arr > 0]
    r_thresh = float(np.quantile(z_arr, 0.75))
    gamma = power_tail_fit(z_arr, r_thresh)
    gamma_stab = tail_fit_stability(z_arr, r_thresh, POWER)
    ci_lo, ci_hi = bootstrap_ci(
        z_arr,
        None,
        r_thresh,
        POWER,
        rng.substream(10**6),
        n_boot=200,
    )
    fit_rows.append(
        (
            "meeting_distance_exponent",
            gamma.exponent,
            gamma.se,
            gamma.threshold,
            gamma.n_used,
            gamma.n_censored,
            int(gamma_stab.stable),
            ci_lo,
            ci_hi,
        )
    )
    write_csv(
        out / "tail_fits.csv",
        [
            "quantity",
            "estimate",
            "se",
            "threshold",
            "n_used",
            "n_censored",
            "stable",
            "boot_ci_lo",
            "boot_ci_hi",
        ],
        fit_rows,
        metadata=meta,
    )
    save_survival_figure(
        z_arr,
        out / "meeting_distance_tail.png",
        "meeting distance",
        f"meeting-distance survival (exponent {gamma.exponent:.2f})",
        logx=True,
    )
    save_survival_figure(
        t_coal[~censored],
        out / "coalescence_time_tail.png",
        "coalescence time",
        f"coalescence-time survival (rate {rho.exponent:.3f})",
        logx=False,
    )
    print(
        f"coalesce: {opt['replicates']} runs, {int(censored.sum())} censored, "
        f"rate={rho.exponent:.3f}, exponent={gamma.exponent:.3f} -> {out}"
    )
    return 0


# -- merge ------------------------------------------------------------------------


def cmd_merge(args, cfg) -> int:
    opt = _options(
        args,
        cfg,
        "merge",
        {
            "t_from": math.log(400.0),
            "t_to": math.log(100.0),
            "n_init": None,
            "resolution": 256,
            "snapshot_times": "",
        },
    )
    out = Path(opt["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    meta = metadata_line(opt["seed"], config_hash(opt))
    rng = RngStream(opt["seed"], 0)
    window = _window(cfg, unit_torus())
    t_from = opt["t_from"]
    if opt["n_init"] is not None:
        t_from = math.log(opt["n_init"] / window.area)

    forest = grow_spacetime(t_from, t_from, window, rng.substream(1))
    raster = rasterize_voronoi(forest, t_from, opt["resolution"])
    cells = init_cells(forest, t_from, raster)
    n0 = cells.live_count
    cells, events = reverse_run(cells, t_from, opt["t_to"], rng.substream(2))

    write_csv(
        out / "merge_log.csv",
        ["time", "deleted", "absorber", "area"],
        ((ev.time, ev.deleted, ev.absorber, ev.area) for ev in events),
        metadata=meta,
    )
    write_csv(
        out / "area_profile.csv",
        ["id", "area_fraction"],
        cell_area_profile(cells),
        metadata=meta,
    )

    snap_times = [float(s) for s in opt["snapshot_times"].split(",") if s.strip()]
    for s_time in snap_times:
        labels = snapshot_labels(raster, events, s_time)
        snap = PartitionRaster(window=window, resolution=opt["resolution"], labels=labels)
        write_ppm(snap, out / f"snapshot_t{s_time:g}.ppm")
    final_labels = cells.relabel(raster)
    final = PartitionRaster(window=window, resolution=opt["resolution"], labels=final_labels)
    write_ppm(final, out / "final.ppm")
    save_partition_figure(
        labels_to_rgb(final_labels),
        out / "final.png",
        title=f"merged partition: {n0} -> {cells.live_count} cells",
    )
    print(f"merge: {n0} -> {cells.live_count} cells, {len(events)} events -> {out}")
    return 0


# -- dim --------------------------------------------------------------------------


def cmd_dim(args, cfg) -> int:
    opt = _options(args, cfg, "dim", {"input_ppm": None, "scales": None})
    if not opt["input_ppm"]:
        raise SystemExit("dim: --input-ppm is required (or set it in the config)")
    out = Path(opt["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    meta = metadata_line(opt.get("seed", 0), config_hash(opt))

    rgb = read_ppm(opt["input_ppm"])
    labels = rgb_to_labels(rgb)
    mask = boundary_mask(labels)

    scales = None
    if opt["scales"]:
        scales = [int(s) for s in opt["scales"].split(",") if s.strip()]
    result = box_count_dimension(mask, scales=scales)
    write_csv(
        out / "boxcount.csv",
        ["scale", "count"],
        zip(result.scales, result.counts),
        metadata=(
            f"{meta} slope={result.slope!r} r2={result.r2!r}"
        ),
    )
    save_boxcount_figure(result, out / "boxcount.png")
    slope = "withheld (r2 below gate)" if result.slope is None else f"{result.slope:.4f}"
    print(f"dim: slope={slope} r2={result.r2:.4f} -> {out}")
    return 0


# -- verify -----------------------------------------------------------------------


def cmd_verify(args, cfg) -> int:
    from .acceptance import DEFAULT_SEED

    opt = _options(args, cfg, "verify", {"criteria": None, "seed": DEFAULT_SEED})
    out = Path(opt["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    numbers = None
    if opt["criteria"]:
        numbers = [int(s) for s in str(opt["criteria"]).split(",") if s.strip()]
    results = run_criteria(numbers=numbers, seed=opt["seed"], echo=print)
    meta = metadata_line(opt["seed"], config_hash(opt))
    write_csv(
        out / "verify_report.csv",
        ["criterion", "name", "passed", "details"],
        ((r.number, r.name, int(r.passed), f'"{r.details}"') for r in results),
        metadata=meta,
    )
    failed = [r for r in results if not r.passed]
    print(
        f"verify: {len(results) - len(failed)}/{len(results)} criteria passed"
        + (f"; FAILED: {[r.number for r in failed]}" if failed else "")
    )
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
