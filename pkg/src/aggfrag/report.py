"""Deterministic result writers: CSV tables, JSON reports, SVG plots.

Numeric outputs (CSV, JSON) are byte-reproducible for a fixed scenario and
seed; floats are written with 17 significant digits. SVG plots are for
humans and excluded from the reproducibility contract.
"""
from __future__ import annotations

import json
import os

import numpy as np

__all__ = ["fmt", "write_csv", "write_json", "write_trajectory_csv",
           "write_full_state_csv", "write_sweep_csv", "write_loglog_svg"]

SCHEMA_VERSION = 1


def fmt(x):
    return format(float(x), ".17g")


def write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(v if isinstance(v, str) else fmt(v) for v in row) + "\n")


def write_json(path, payload):
    payload = {"schema": SCHEMA_VERSION, **payload}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _sanitize(obj):
    """Make numpy containers JSON-serializable."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def sanitized_json(path, payload):
    write_json(path, _sanitize(payload))


def write_trajectory_csv(path, traj, sigma, extra=()):
    """Shared schema for discrete and continuum runs.

    Columns: t, monomer, M0, M1, M1s (the 1+sigma moment), residual_abs,
    residual_rel, then any extra named series.
    """
    if hasattr(traj, "v"):
        mono = traj.v
        resid, rel = _disc_residual(traj)
    else:
        mono = traj.V
        resid, rel = traj.residual()
    m0 = traj.moment_series(0.0)
    m1 = traj.moment_series(1.0)
    m1s = traj.moment_series(1.0 + sigma)
    header = ["t", "monomer", "M0", "M1", "M1s", "residual_abs", "residual_rel"]
    cols = [traj.times, mono, m0, m1, m1s, resid, rel]
    for name, series in extra:
        header.append(name)
        cols.append(series)
    rows = zip(*cols)
    write_csv(path, header, rows)


def _disc_residual(traj):
    from .discrete import mass_balance_residual

    return mass_balance_residual(traj)


def write_full_state_csv(path, traj):
    """(t, coordinate, value) triples of the full field at every snapshot."""
    if hasattr(traj, "v"):
        coords = traj.sizes().astype(float)
        field = traj.u
        label = "i"
    else:
        coords = traj.grid.centers
        field = traj.U
        label = "x"
    rows = []
    for k, t in enumerate(traj.times):
        for c, val in zip(coords, field[k]):
            rows.append((t, c, val))
    write_csv(path, ["t", label, "value"], rows)


def write_sweep_csv(path, eps_values, distances):
    """Long-format (test_function, eps, distance) table."""
    rows = []
    for name, series in distances.items():
        for e, d in zip(eps_values, series):
            rows.append((name, e, d))
    write_csv(path, ["test_function", "eps", "distance"], rows)


def write_loglog_svg(path, eps_values, distances, title):
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "aggfrag"
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4.5))
    for name, series in distances.items():
        series = np.asarray(series, dtype=float)
        keep = series > 0
        ax.loglog(np.asarray(eps_values)[keep], series[keep], "o-", label=name,
                  markersize=3.5, linewidth=1.0)
    ax.set_xlabel("eps")
    ax.set_ylabel("sup-t pairing gap")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=6, loc="best")
    fig.tight_layout()
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)
    return os.path.basename(path)
