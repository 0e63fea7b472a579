"""Report emission: delimited tables, canonical JSON, and rendered figures.

CSV output is deterministic and column-stable so identical runs produce
byte-identical files; figures are rendered to PNG next to the delimited
output.
"""

import json
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

__all__ = ["CSV_COLUMNS", "emit_report", "write_trajectory_csv",
           "solution_figure", "field_figure", "order_sweep_figure",
           "points_sweep_figure", "iae_figure", "frequency_figure"]

CSV_COLUMNS = ["experiment", "method", "order", "epsilon", "N", "mae",
               "iae_final", "omega_mae", "time_ms_median", "time_ms_mean",
               "seed", "config_hash"]


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def _report_row(r):
    return [r.experiment, r.method, r.order, r.epsilon, r.n_points, r.mae,
            r.iae_final, r.omega_mae, r.time_ms_median, r.time_ms_mean,
            r.seed, r.config_hash]


def emit_report(reports, path, fmt="csv"):
    """Write metric reports as a flat CSV table or canonical JSON."""
    if not reports:
        raise ValueError("no reports to emit")
    try:
        if fmt == "csv":
            lines = [",".join(CSV_COLUMNS)]
            for r in reports:
                lines.append(",".join(_fmt(v) for v in _report_row(r)))
            with open(path, "w", newline="") as fh:
                fh.write("\n".join(lines) + "\n")
        elif fmt == "json":
            payload = [dict(zip(CSV_COLUMNS, [None if _fmt(v) == "" else v
                                              for v in _report_row(r)]))
                       for r in reports]
            with open(path, "w") as fh:
                json.dump(payload, fh, sort_keys=True, indent=2)
                fh.write("\n")
        else:
            raise ValueError(f"unknown report format {fmt!r}")
    except OSError as exc:
        raise OSError(f"failed writing report to {path}: {exc}") from exc
    return path


def write_trajectory_csv(path, grid, columns):
    """Delimited trajectory table: time plus named value columns."""
    names = ["t"] + list(columns)
    arrays = [np.asarray(grid, dtype=float)] + \
        [np.asarray(v, dtype=float) for v in columns.values()]
    lines = [",".join(names)]
    for row in zip(*arrays):
        lines.append(",".join(format(v, ".12g") for v in row))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def solution_figure(path, t, approx, reference, title=""):
    fig, axes = plt.subplots(2, 1, figsize=(7, 5), sharex=True,
                             gridspec_kw={"height_ratios": [2, 1]})
    axes[0].plot(t, reference, "k-", lw=1.2, label="reference")
    axes[0].plot(t, approx, "C3--", lw=1.2, label="series solve")
    axes[0].set_ylabel("x(t)")
    axes[0].legend(frameon=False)
    if title:
        axes[0].set_title(title)
    axes[1].semilogy(t, np.abs(np.asarray(approx) - np.asarray(reference)) + 1e-18,
                     "C0-", lw=1.0)
    axes[1].set_xlabel("t")
    axes[1].set_ylabel("|error|")
    return _save(fig, path)


def field_figure(path, x, t, approx, reference, title=""):
    err = np.abs(approx - reference)
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.4))
    extent = [x[0], x[-1], t[0], t[-1]]
    for ax, data, name in zip(axes, (approx, reference, err),
                              ("series solve", "reference", "|error|")):
        im = ax.imshow(data, origin="lower", aspect="auto", extent=extent,
                       cmap="viridis" if name != "|error|" else "magma")
        ax.set_title(name)
        ax.set_xlabel("x")
        fig.colorbar(im, ax=ax, shrink=0.85)
    axes[0].set_ylabel("t")
    if title:
        fig.suptitle(title)
    return _save(fig, path)


def order_sweep_figure(path, rows, title=""):
    orders = [r["order"] for r in rows]
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.6))
    axes[0].plot(orders, [r["time_ms"] for r in rows], "o-")
    axes[0].set_xlabel("corrections")
    axes[0].set_ylabel("median solve time (ms)")
    axes[1].semilogy(orders, [r["mae"] for r in rows], "o-", label="network solve")
    if "floor_mae" in rows[0]:
        axes[1].semilogy(orders, [r["floor_mae"] for r in rows], "k--",
                         label="oracle-solved hierarchy")
    axes[1].set_xlabel("corrections")
    axes[1].set_ylabel("MAE")
    axes[1].legend(frameon=False)
    if title:
        fig.suptitle(title)
    return _save(fig, path)


def points_sweep_figure(path, rows, title=""):
    fig, ax = plt.subplots(figsize=(5, 3.4))
    ax.semilogy([r["n_points"] for r in rows], [r["mae"] for r in rows], "o-")
    ax.set_xlabel("inference points")
    ax.set_ylabel("MAE")
    if title:
        ax.set_title(title)
    return _save(fig, path)


def iae_figure(path, curves, title=""):
    """curves: mapping label -> (times, iae array)."""
    fig, ax = plt.subplots(figsize=(6, 3.6))
    for label, (t, iae) in curves.items():
        ax.plot(t, iae, lw=1.2, label=label)
    ax.set_xlabel("t")
    ax.set_ylabel("IAE(t)")
    ax.legend(frameon=False)
    if title:
        ax.set_title(title)
    return _save(fig, path)


def frequency_figure(path, freq_series, title=""):
    contrib = freq_series.contributions()
    fig, ax = plt.subplots(figsize=(5, 3.4))
    ax.semilogy(range(len(contrib)), [max(c, 1e-18) for c in contrib], "o-")
    ax.set_xlabel("order")
    ax.set_ylabel("relative frequency contribution")
    if title:
        ax.set_title(title)
    return _save(fig, path)
