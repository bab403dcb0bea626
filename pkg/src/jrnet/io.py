"""CSV / JSON artifact formats.

Series CSV: time column first, one header label per channel, one row per
time point.  Curves: grid,value per row.  Generations: weight, distance,
then the named continuous and binary slots.  Floats are written with
repr so round trips are exact.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .inference import Generation, RunRecord
from .integrator import MultiSeries
from .summaries import Curve, SummarySet

__all__ = [
    "write_series",
    "ingest_csv",
    "write_curve",
    "write_summary_set",
    "write_adjacency",
    "read_adjacency",
    "write_run_record",
    "read_generation",
]


def _fmt(x: float) -> str:
    return repr(float(x))


def write_series(path, series: MultiSeries):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", *series.labels])
        times = series.times()
        for i in range(series.n_points):
            w.writerow([_fmt(times[i])] + [_fmt(v) for v in series.channels[:, i]])


def ingest_csv(path, scale: float = 1.0, dt: float | None = None) -> MultiSeries:
    """Load a rectangular channels CSV; every value is multiplied by scale.

    The first column is time (dt inferred from its median spacing,
    validated uniform to 1e-6 relative) or a plain index when dt is given.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    width = len(header)
    if width < 2:
        raise ValueError(f"{path}: need a time/index column plus channels")
    data = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ValueError(f"{path}: ragged row {i + 2}")
        try:
            data[i] = [float(v) for v in row]
        except ValueError:
            raise ValueError(f"{path}: non-numeric cell in row {i + 2}") from None
    tcol = data[:, 0]
    if dt is None:
        spac = np.diff(tcol)
        dt = float(np.median(spac))
        if dt <= 0 or np.max(np.abs(spac - dt)) > 1e-6 * dt:
            raise ValueError(f"{path}: non-uniform time grid")
    channels = data[:, 1:].T * scale
    return MultiSeries(dt=dt, channels=channels, labels=tuple(header[1:]))


def write_curve(path, curve: Curve):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["grid", "value"])
        for g, v in zip(curve.grid, curve.values):
            w.writerow([_fmt(g), _fmt(v)])


def write_summary_set(out_dir, summaries: SummarySet, prefix: str = ""):
    """One CSV per curve plus a manifest listing them."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {"densities": [], "spectra": [], "ccfs": {}}
    for k, curve in enumerate(summaries.densities):
        name = f"{prefix}density_{k + 1}.csv"
        write_curve(out_dir / name, curve)
        manifest["densities"].append(name)
    for k, curve in enumerate(summaries.spectra):
        name = f"{prefix}spectrum_{k + 1}.csv"
        write_curve(out_dir / name, curve)
        manifest["spectra"].append(name)
    for (j, k), curve in summaries.ccfs.items():
        name = f"{prefix}ccf_{j + 1}{k + 1}.csv"
        write_curve(out_dir / name, curve)
        manifest["ccfs"][f"{j + 1},{k + 1}"] = name
    with open(out_dir / f"{prefix}manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)


def write_adjacency(path, matrix):
    np.savetxt(path, np.asarray(matrix), fmt="%s", delimiter=",")


def read_adjacency(path) -> np.ndarray:
    return np.atleast_2d(np.loadtxt(path, delimiter=","))


def _write_generation(path, gen: Generation, c_names, b_names):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["weight", "distance", *c_names, *b_names])
        for h in range(gen.M):
            row = [_fmt(gen.weights[h]), _fmt(gen.distances[h])]
            row += [_fmt(v) for v in gen.theta_c[h]]
            row += [str(int(v)) for v in gen.theta_b[h]]
            w.writerow(row)


def read_generation(path, c_n: int, meta: dict) -> Generation:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return Generation(
        theta_c=data[:, 2:2 + c_n],
        theta_b=data[:, 2 + c_n:].astype(np.int8),
        weights=data[:, 0],
        distances=data[:, 1],
        threshold=meta["threshold"],
        iteration=meta["iteration"],
        sims_used=meta["sims_used"],
        acceptance_rate=meta["acceptance_rate"],
    )


def write_run_record(out_dir, record: RunRecord, c_names, b_names, config_echo):
    """Persist one CSV per generation plus run metadata with the config echo."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    trace = []
    for i, gen in enumerate(record.generations):
        name = f"generation_{gen.iteration:03d}.csv"
        _write_generation(out_dir / name, gen, c_names, b_names)
        from .inference import ess
        trace.append({
            "iteration": gen.iteration,
            "file": name,
            "threshold": gen.threshold,
            "ess": ess(gen.weights),
            "acceptance_rate": gen.acceptance_rate,
            "sims_used": gen.sims_used,
            "wallclock_s": record.wallclock[i + 1] if i + 1 < len(record.wallclock) else None,
        })
    meta = {
        "status": record.status,
        "sims_used": record.sims_used,
        "pilot_wallclock_s": record.wallclock[0] if record.wallclock else None,
        "iterations": trace,
        "continuous_slots": list(c_names),
        "binary_slots": list(b_names),
        "config": config_echo,
    }
    with open(out_dir / "run.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
    if record.pilot_distances.size:
        np.savetxt(out_dir / "pilot_distances.csv", record.pilot_distances,
                   delimiter=",", fmt="%r")
