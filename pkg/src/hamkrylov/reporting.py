"""CSV and figure output for experiment runs.

CSV files are the primary contract: one per method with the header
``t,energy,energy_error[,H_0,H_1,...][,global_error]``, RFC-4180 framing and
floats written as shortest round-trip decimals, so identical runs produce
byte-identical files.  Figures are rendered next to the CSVs as PNG files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .projections import TrajectoryRecord


def _fmt(x: float) -> str:
    return repr(float(x))


def trajectory_header(integral_ks, include_global: bool) -> list[str]:
    cols = ["t", "energy", "energy_error"]
    cols += [f"H_{k}" for k in integral_ks]
    if include_global:
        cols.append("global_error")
    return cols


def write_trajectory_csv(path, record: TrajectoryRecord, integral_ks) -> Path:
    path = Path(path)
    include_global = record.global_error is not None
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(trajectory_header(integral_ks, include_global))
        for i in range(record.times.size):
            row = [
                _fmt(record.times[i]),
                _fmt(record.energy[i]),
                _fmt(record.energy_error[i]),
            ]
            row += [_fmt(record.integrals[k][i]) for k in integral_ks]
            if include_global:
                row.append(_fmt(record.global_error[i]))
            writer.writerow(row)
    return path


def write_convergence_csv(path, rows) -> Path:
    """Rows are dicts with method, krylov_dim, basis_dim, final_global_error,
    monotone_ok."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["method", "krylov_dim", "basis_dim", "final_global_error", "monotone_ok"]
        )
        for row in rows:
            writer.writerow(
                [
                    row["method"],
                    row["krylov_dim"],
                    row["basis_dim"],
                    _fmt(row["final_global_error"]),
                    str(bool(row["monotone_ok"])).lower(),
                ]
            )
    return path


def write_json(path, payload) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _plot_stride(n: int, cap: int = 5000) -> int:
    return max(1, n // cap)


def _drift_floor(values: np.ndarray) -> np.ndarray:
    return np.maximum(np.abs(values), 1e-18)


def render_run_figures(outdir, records: dict, integral_ks) -> list[Path]:
    """Energy-error, first-integral and global-error figures for one run."""
    import matplotlib.pyplot as plt

    outdir = Path(outdir)
    written = []

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for method, rec in records.items():
        s = _plot_stride(rec.times.size)
        ax.semilogy(rec.times[::s], _drift_floor(rec.energy_error)[::s], label=method)
    ax.set_xlabel("t")
    ax.set_ylabel("|energy error|")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    target = outdir / "energy_error.png"
    fig.savefig(target, dpi=150)
    plt.close(fig)
    written.append(target)

    if integral_ks:
        fig, axes = plt.subplots(
            1, len(integral_ks), figsize=(5.5 * len(integral_ks), 4.0), squeeze=False
        )
        for col, k in enumerate(integral_ks):
            ax = axes[0][col]
            for method, rec in records.items():
                vals = rec.integrals[k]
                s = _plot_stride(rec.times.size)
                ax.semilogy(
                    rec.times[::s], _drift_floor(vals - vals[0])[::s], label=method
                )
            ax.set_xlabel("t")
            ax.set_ylabel(f"|H_{k}(t) - H_{k}(0)|")
            ax.grid(True, which="both", alpha=0.3)
            ax.legend()
        fig.tight_layout()
        target = outdir / "first_integrals.png"
        fig.savefig(target, dpi=150)
        plt.close(fig)
        written.append(target)

    with_global = {m: r for m, r in records.items() if r.global_error is not None}
    if with_global:
        fig, ax = plt.subplots(figsize=(7, 4.5))
        for method, rec in with_global.items():
            s = _plot_stride(rec.times.size)
            ax.semilogy(
                rec.times[::s], _drift_floor(rec.global_error)[::s], label=method
            )
        ax.set_xlabel("t")
        ax.set_ylabel("global error")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
        fig.tight_layout()
        target = outdir / "global_error.png"
        fig.savefig(target, dpi=150)
        plt.close(fig)
        written.append(target)

    return written


def render_convergence_figure(outdir, rows) -> Path:
    import matplotlib.pyplot as plt

    outdir = Path(outdir)
    by_method: dict[str, list] = {}
    for row in rows:
        by_method.setdefault(row["method"], []).append(row)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for method, entries in by_method.items():
        dims = [e["krylov_dim"] for e in entries]
        errs = [max(e["final_global_error"], 1e-18) for e in entries]
        ax.semilogy(dims, errs, marker="o", label=method)
    ax.set_xlabel("Krylov dimension")
    ax.set_ylabel("global error at T")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    target = outdir / "convergence.png"
    fig.savefig(target, dpi=150)
    plt.close(fig)
    return target
