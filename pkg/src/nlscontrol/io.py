"""On-disk formats: CSV time series, control files and JSON manifests."""

from __future__ import annotations

import csv
import json
import platform
from pathlib import Path

import numpy as np

from . import __version__
from .control import ControlPath, make_control
from .grid import write_snapshot


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path, header, columns) -> None:
    """Write equal-length columns with a header row; floats use shortest round-trip repr."""
    columns = [np.asarray(c) for c in columns]
    lengths = {len(c) for c in columns}
    if len(lengths) != 1:
        raise ValueError(f"columns have mismatched lengths {sorted(lengths)}")
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([_cell(v) for v in row])


def read_csv(path) -> dict[str, np.ndarray]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty CSV")
    header, body = rows[0], [r for r in rows[1:] if r]
    try:
        data = np.array(body, dtype=float).reshape(len(body), len(header))
    except ValueError as exc:
        raise ValueError(f"{path}: malformed CSV ({exc})") from None
    return {name: data[:, j] for j, name in enumerate(header)}


def write_field_csv(path, grid, field) -> None:
    """Real field as ``x,value`` rows (1D grids only)."""
    if grid.dim != 1:
        raise ValueError("CSV field export is only defined for dim = 1")
    write_csv(path, ["x", "value"], [grid.x, np.asarray(field, dtype=float)])


def write_field_snapshot(path, grid, field) -> None:
    """Real field in the NLSC format with zero imaginary parts."""
    write_snapshot(path, grid, np.asarray(field, dtype=float).astype(complex))


def write_diagnostics(path, traj) -> None:
    write_csv(path, ["t", "mass", "omega", "energy"], [traj.times, traj.mass, traj.omega, traj.energy])


def write_control_csv(path, c: ControlPath) -> None:
    write_csv(path, ["t", "phi"], [c.times, c.nodes])


def read_control_csv(path, bounds=None) -> ControlPath:
    data = read_csv(path)
    if "t" not in data or "phi" not in data:
        raise ValueError(f"{path}: control CSV needs columns t, phi")
    t, phi = data["t"], data["phi"]
    n = t.size - 1
    if n < 2:
        raise ValueError(f"{path}: need at least 3 nodes")
    if not np.allclose(np.diff(t), t[-1] / n, rtol=1e-9, atol=1e-12) or t[0] != 0.0:
        raise ValueError(f"{path}: control nodes must be uniform and start at t = 0")
    return make_control(float(t[-1]), n, float(phi[0]), phi, bounds=bounds)


def control_descriptor(c: ControlPath, shape: str = "nodal") -> dict:
    return {"T": c.horizon, "n_steps": c.n_steps, "phi0": c.phi0, "shape": shape}


def control_from_descriptor(desc: dict, bounds=None) -> ControlPath:
    return make_control(
        float(desc["T"]),
        int(desc["n_steps"]),
        float(desc["phi0"]),
        desc.get("shape", "constant"),
        amplitude=float(desc.get("amplitude", 1.0)),
        bounds=bounds,
    )


def write_pairing_csv(path, series) -> None:
    write_csv(path, ["t", "g"], [series.times, series.g])


def write_gradient_csv(path, c: ControlPath, grad, lift) -> None:
    write_csv(path, ["t", "grad", "h_lift"], [c.times[1:], grad.nodes, lift.nodes])


def write_iterates_csv(path, iterates) -> None:
    cols = {k: [] for k in ("iter", "terminal", "work", "penalty", "total", "grad_h1", "step")}
    for it in iterates:
        cols["iter"].append(it["iter"])
        for k in ("terminal", "work", "penalty", "total"):
            cols[k].append(it["cost"][k])
        cols["grad_h1"].append(it["grad_h1"])
        cols["step"].append(it["step"])
    write_csv(path, list(cols), [np.array(v) for v in cols.values()])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    return obj


def dump_json(path, payload) -> None:
    Path(path).write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")


def manifest(command: str, config: dict, seed: int, invariants: dict, wall_time: float, **extra) -> dict:
    return {
        "command": command,
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "seed": seed,
        "config": config,
        "invariants": invariants,
        "wall_time_s": wall_time,
        **extra,
    }
