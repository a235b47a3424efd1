"""Run artifacts: CSV time series, snapshots, JSON summary, manifest.

All floating-point output is printed with 17 significant digits so that
identical runs produce bit-identical files.  Snapshot format, one file
per record:

    nsf-snapshot v1 t=<time> nx=<nx> ny=<ny> n_modes=<n>
    <n_modes velocity coefficients, space separated>
    <ny+2 rows of nx+2 temperature values, row-major over the lattice>
"""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np

from .diagnostics import CSV_COLUMNS, DiagnosticsRecord
from .errors import ConfigError
from .grid import Grid, ScalarField
from .state import SimulationState


def fmt(x: float) -> str:
    return f"{float(x):.17g}"


def write_csv(path: str, records: list[DiagnosticsRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for rec in records:
            fh.write(",".join(fmt(v) for v in rec.row()) + "\n")


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_snapshot(path: str, state: SimulationState) -> None:
    grid = state.theta.grid
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"nsf-snapshot v1 t={fmt(state.t)} nx={grid.nx} ny={grid.ny} "
                 f"n_modes={state.coeffs.size}\n")
        fh.write(" ".join(fmt(c) for c in state.coeffs) + "\n")
        for row in state.theta.values:
            fh.write(" ".join(fmt(v) for v in row) + "\n")


def read_snapshot(path: str) -> tuple[float, np.ndarray, np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if not header or header[0] != "nsf-snapshot" or header[1] != "v1":
            raise ConfigError(f"{path} is not a v1 snapshot")
        meta = dict(part.split("=") for part in header[2:])
        t = float(meta["t"])
        coeffs = np.array([float(v) for v in fh.readline().split()])
        theta = np.loadtxt(fh, ndmin=2)
    nx, ny = int(meta["nx"]), int(meta["ny"])
    if theta.shape != (ny + 2, nx + 2):
        raise ConfigError(f"{path}: temperature block has shape {theta.shape}, "
                          f"expected {(ny + 2, nx + 2)}")
    return t, coeffs, theta


def snapshot_state(path: str, grid: Grid) -> SimulationState:
    t, coeffs, theta = read_snapshot(path)
    return SimulationState(t, coeffs, ScalarField(grid, theta))


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def revision_string() -> str:
    try:
        import subprocess
        out = subprocess.run(["git", "rev-parse", "--short", "HEAD"],
                             capture_output=True, text=True, timeout=5,
                             cwd=os.path.dirname(os.path.abspath(__file__)))
        if out.returncode == 0:
            return out.stdout.strip()
    except Exception:
        pass
    return "unknown"


def write_manifest(out_dir: str, config_hash: str, started: str, finished: str,
                   exit_status: int, extra: dict | None = None) -> str:
    """List every artifact under out_dir; written even for failed runs."""
    artifacts = []
    for root, _dirs, files in os.walk(out_dir):
        for name in sorted(files):
            if name == "manifest.json":
                continue
            rel = os.path.relpath(os.path.join(root, name), out_dir)
            artifacts.append(rel)
    payload = {
        "config_sha256": config_hash,
        "started": started,
        "finished": finished,
        "revision": revision_string(),
        "exit_status": exit_status,
        "artifacts": sorted(artifacts),
    }
    if extra:
        payload.update(extra)
    path = os.path.join(out_dir, "manifest.json")
    write_json(path, payload)
    return path
