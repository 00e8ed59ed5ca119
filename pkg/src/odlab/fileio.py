"""CSV and JSON writers for run outputs.

Every numeric cell is written with 17 significant digits so byte-level
diffs of two runs are meaningful regression evidence.  Timing values are
the one exception: they land only in the manifest and timing JSON, which
reproducibility checks must exclude.
"""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path

import numpy as np

from .analysis import MomentSummary, StationaryPoint, TimingLedger
from .errors import ConfigError
from .histogram import JointDensityGrid, MarginalDensity
from .scenarios import ScenarioConfig

__all__ = [
    "fmt",
    "output_root",
    "write_joint_csv",
    "write_marginal_csv",
    "write_moments_csv",
    "write_errors_csv",
    "write_timing_json",
    "write_stationary_csv",
    "write_contours_csv",
    "write_labels_csv",
    "write_manifest",
    "load_config",
]

ENV_OUT_DIR = "ODL_OUT_DIR"


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def output_root(explicit: str | None = None) -> Path:
    """--out flag if given, else $ODL_OUT_DIR, else ./out."""
    if explicit:
        return Path(explicit)
    env = os.environ.get(ENV_OUT_DIR)
    return Path(env) if env else Path("out")


def write_joint_csv(path, joint: JointDensityGrid) -> None:
    """Long-format grid: one row per bin with centers, edges, and density."""
    grid = joint.grid
    with open(path, "w", newline="") as fh:
        fh.write(f"# method = {joint.method}\n")
        fh.write(f"# time = {fmt(joint.time)}\n")
        fh.write(f"# axes = {joint.labels[0]},{joint.labels[1]}\n")
        w = csv.writer(fh)
        w.writerow([f"{joint.labels[0]}_center", f"{joint.labels[1]}_center",
                    f"{joint.labels[0]}_lo", f"{joint.labels[0]}_hi",
                    f"{joint.labels[1]}_lo", f"{joint.labels[1]}_hi",
                    "density"])
        c1, c2 = grid.centers1, grid.centers2
        e1, e2 = grid.edges1, grid.edges2
        for i in range(grid.n1):
            for j in range(grid.n2):
                w.writerow([fmt(c1[i]), fmt(c2[j]),
                            fmt(e1[i]), fmt(e1[i + 1]),
                            fmt(e2[j]), fmt(e2[j + 1]),
                            fmt(joint.values[i, j])])


def write_marginal_csv(path, marg: MarginalDensity) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# method = {marg.method}\n")
        fh.write(f"# time = {fmt(marg.time)}\n")
        half = 0.5 * marg.width
        w = csv.writer(fh)
        w.writerow([f"{marg.label}_center", f"{marg.label}_lo",
                    f"{marg.label}_hi", "density"])
        for i in range(len(marg.values)):
            c = marg.centers[i]
            w.writerow([fmt(c), fmt(c - half), fmt(c + half),
                        fmt(marg.values[i])])


def write_moments_csv(path, rows: list[MomentSummary]) -> None:
    """One row per (method, snapshot): the moment-table layout."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "time", "mu_phi", "sigma_phi", "mu_e", "sigma_e"])
        for r in rows:
            w.writerow([r.method, fmt(r.time), fmt(r.mu_phi),
                        fmt(r.sigma_phi), fmt(r.mu_e), fmt(r.sigma_e)])


def write_errors_csv(path, rows: list[tuple[str, float, np.ndarray]]) -> None:
    """Relative errors vs the reference method, one row per snapshot.

    Each row is (method, time, 4-vector of errors); nan marks components
    whose reference value is zero.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "time", "err_mu_phi", "err_sigma_phi",
                    "err_mu_e", "err_sigma_e"])
        for method, t, e in rows:
            w.writerow([method, fmt(t)] + [fmt(v) for v in e])


def write_timing_json(path, ledgers: list[TimingLedger],
                      reference_method: str | None = None) -> None:
    """Two-part wall-time table plus ratios, normalized to one method."""
    ref = None
    if reference_method is not None:
        for led in ledgers:
            if led.method == reference_method:
                ref = led.t_cal
    entries = []
    for led in ledgers:
        row = {
            "method": led.method,
            "t_propagation_s": led.t_prop,
            "t_interpolation_s": led.t_int,
            "t_calculation_s": led.t_cal,
            "propagation_share": led.ratios[0],
            "interpolation_share": led.ratios[1],
        }
        if ref:
            row["normalized_t_calculation"] = led.normalized(ref)
        entries.append(row)
    payload = {"reference_method": reference_method, "cases": entries}
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def write_stationary_csv(path, points: tuple[StationaryPoint, ...]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["phi", "e", "hamiltonian", "kind"])
        for q in points:
            w.writerow([fmt(q.phi), fmt(q.e), fmt(q.hamiltonian), q.kind])


def write_contours_csv(path, levels: list[tuple[float, list[np.ndarray]]]) -> None:
    """Contour polylines: (level, polyline id, vertex order, phi, e) rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["level", "polyline", "vertex", "phi", "e"])
        for level, polys in levels:
            for pid, poly in enumerate(polys):
                for vid, (phi, e) in enumerate(poly):
                    w.writerow([fmt(level), pid, vid, fmt(phi), fmt(e)])


def write_labels_csv(path, rows: list[tuple[float, float, str]]) -> None:
    """Sub-domain labels of probe states: (phi, e, label) rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["phi", "e", "label"])
        for phi, e, label in rows:
            w.writerow([fmt(phi), fmt(e), label])


def write_manifest(path, scenario: ScenarioConfig, *, command: str,
                   timings: dict[str, float], extra: dict | None = None) -> None:
    """Echo the full effective config so a run can be re-created exactly."""
    payload = {
        "command": command,
        "scenario": scenario.to_dict(),
        "timings_s": timings,
    }
    if extra:
        payload.update(extra)
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def load_config(path) -> dict:
    """Parse a YAML/JSON config document into a flat field dict.

    Accepts either top-level scenario fields or a `scenario:` block with
    the fields nested one level down.
    """
    import yaml

    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}" if mark is not None else ""
        raise ConfigError(f"config parse error{where}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    if "scenario" in data and isinstance(data["scenario"], dict):
        nested = dict(data["scenario"])
        for key, val in data.items():
            if key != "scenario":
                nested[key] = val
        return nested
    return data
