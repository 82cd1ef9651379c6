"""Report writers: delimited output plus rendered figures.

Every CSV carries one comment line recording the seed, the config hash
and the tool version, then a header row.  Float fields are written with
repr so reruns under the same seed produce byte-identical files.
Figures are rendered with the Agg backend next to the CSVs they
illustrate; they are a reporting convenience, never an input.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import __version__


def config_hash(config: dict) -> str:
    """Short stable hash of a JSON-serializable configuration.

    The output directory is excluded: it names a destination, not an
    experiment, and the same config+seed must hash equally wherever the
    results land.
    """
    canon = json.dumps(
        {k: v for k, v in config.items() if k != "out_dir"},
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:12]


def metadata_line(seed: int, cfg_hash: str) -> str:
    return f"seed={seed} config_hash={cfg_hash} version={__version__}"


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return repr(v)
    if isinstance(v, (np.floating,)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_csv(path, header: list[str], rows, metadata: str | None = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        if metadata:
            fh.write(f"# {metadata}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_csv_rows(path) -> tuple[list[str], list[list[str]]]:
    """Small reader for the package's own CSVs (skips comment lines)."""
    header: list[str] = []
    rows: list[list[str]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            if not header:
                header = line.split(",")
            else:
                rows.append(line.split(","))
    return header, rows


# -- figures -------------------------------------------------------------------


def save_partition_figure(rgb: np.ndarray, path, title: str | None = None) -> None:
    fig, ax = plt.subplots(figsize=(6, 6))
    ax.imshow(rgb[::-1], interpolation="nearest")
    ax.set_xticks([])
    ax.set_yticks([])
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=160)
    plt.close(fig)


def save_survival_figure(
    samples: np.ndarray,
    path,
    xlabel: str,
    title: str,
    logx: bool = True,
    fit_label: str | None = None,
) -> None:
    """Log survival plot; the visual companion to the MLE tail fits."""
    x = np.sort(np.asarray(samples))
    x = x[x > 0]
    surv = 1.0 - np.arange(1, len(x) + 1) / len(x)
    keep = surv > 0
    fig, ax = plt.subplots(figsize=(5, 4))
    if logx:
        ax.loglog(x[keep], surv[keep], ".", ms=2)
    else:
        ax.semilogy(x[keep], surv[keep], ".", ms=2)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("survival fraction")
    if fit_label:
        ax.set_title(f"{title}\n{fit_label}")
    else:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=160)
    plt.close(fig)


def save_boxcount_figure(result, path) -> None:
    ks = np.asarray(result.scales, dtype=float)
    ns = np.asarray(result.counts, dtype=float)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(1.0 / ks, ns, "o-")
    slope = "withheld (low r2)" if result.slope is None else f"{result.slope:.3f}"
    ax.set_xlabel("1 / box size")
    ax.set_ylabel("occupied boxes")
    ax.set_title(f"box counting: slope {slope}, r2={result.r2:.4f}")
    fig.tight_layout()
    fig.savefig(path, dpi=160)
    plt.close(fig)


def save_path_figure(grid_t: np.ndarray, grid_x: np.ndarray, path, title: str) -> None:
    fig, ax = plt.subplots(figsize=(6, 3))
    ax.plot(grid_t, grid_x, lw=0.7)
    ax.set_xlabel("time")
    ax.set_ylabel("value")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=160)
    plt.close(fig)


def save_scaling_figure(
    xs: np.ndarray, ys: np.ndarray, path, xlabel: str, ylabel: str, title: str
) -> None:
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(xs, ys, "o-")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=160)
    plt.close(fig)
