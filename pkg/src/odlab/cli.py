"""Command-line front end.

Subcommands: portrait, run, compare, split-lib, validate.  All numeric
output goes through the fileio writers, so reruns with the same config
and seed produce byte-identical CSV payloads; wall-clock times appear
only in manifest/timing JSON.
"""

from __future__ import annotations

import argparse
import dataclasses
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from . import analysis, fileio
from .analysis import sample_moments, timing_ledger
from .dynamics import OrbitParams, PolarPhaseState
from .errors import ConfigError
from .gmmut import build_split_library, run_gmmut, save_split_library
from .propagators import run_dee, run_mc
from .scenarios import ScenarioConfig, builtin_scenarios, desk_case, paper_case

_PAPER_METHOD_CASES = {"mc": ("mc",), "dee": ("dee-961", "dee-1e5"),
                       "gmmut": ("gmmut",)}


def _build_scenario(args, method: str) -> ScenarioConfig:
    base = builtin_scenarios()[args.scenario]
    if getattr(args, "paper_scale", False):
        case = _PAPER_METHOD_CASES[method][0]
        sc = paper_case(base, case)
    else:
        sc = desk_case(base, method)
    if args.config:
        overrides = fileio.load_config(args.config)
        sc = ScenarioConfig.from_dict({**sc.to_dict(), **overrides})
    if args.seed is not None:
        sc = dataclasses.replace(sc, seed=args.seed)
    return sc


def _moment_rows(result, label: str):
    rows = []
    for snap in result.snapshots:
        rows.append(sample_moments(snap.moment_points, snap.moment_weights,
                                   method=label, time=snap.time))
    return rows


def _gmm_moment_rows(result, label: str):
    rows = []
    for snap in result.snapshots:
        sd = np.sqrt(np.diag(snap.cov))
        rows.append(analysis.MomentSummary(
            time=snap.time, method=label,
            mu_phi=float(snap.mean[0]), sigma_phi=float(sd[0]),
            mu_e=float(snap.mean[1]), sigma_e=float(sd[1])))
    return rows


def _execute(scenario: ScenarioConfig, method: str, label: str, workers: int):
    """Run one case; returns (moment rows, snapshots, ledger)."""
    if method == "mc":
        res = run_mc(scenario, workers=workers)
        rows = _moment_rows(res, label)
    elif method == "dee":
        res = run_dee(scenario, workers=workers)
        rows = _moment_rows(res, label)
    else:
        res = run_gmmut(scenario)
        rows = _gmm_moment_rows(res, label)
    led = timing_ledger(label, res.t_propagation,
                        res.t_interpolation if method != "gmmut"
                        else res.t_evaluation)
    return rows, res.snapshots, led


def _snapshot_stem(t: float) -> str:
    return f"t{t:g}"


def cmd_run(args) -> int:
    sc = _build_scenario(args, args.method)
    out = fileio.output_root(args.out) / f"run-s{args.scenario}-{args.method}"
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    rows, snaps, led = _execute(sc, args.method, args.method.upper(),
                                args.workers)
    wall = time.perf_counter() - t0
    fileio.write_moments_csv(out / "moments.csv", rows)
    for snap in snaps:
        stem = _snapshot_stem(snap.time)
        fileio.write_joint_csv(out / f"joint_{stem}.csv", snap.joint)
        fileio.write_marginal_csv(out / f"marginal_phi_{stem}.csv",
                                  snap.marginal_phi)
        fileio.write_marginal_csv(out / f"marginal_e_{stem}.csv",
                                  snap.marginal_e)
    fileio.write_timing_json(out / "timing.json", [led])
    fileio.write_manifest(out / "manifest.json", sc,
                          command="run",
                          timings={"total_s": wall,
                                   "propagation_s": led.t_prop,
                                   "interpolation_s": led.t_int})
    for r in rows:
        print(f"t={r.time:g}: mu_phi={r.mu_phi:.5f} sigma_phi={r.sigma_phi:.5f}"
              f" mu_e={r.mu_e:.5f} sigma_e={r.sigma_e:.5f}")
    print(f"wrote {out}")
    return 0


def cmd_compare(args) -> int:
    suffix = "-paper" if args.paper_scale else ""
    out = fileio.output_root(args.out) / f"compare-s{args.scenario}{suffix}"
    out.mkdir(parents=True, exist_ok=True)
    if args.paper_scale:
        cases = [("mc", "mc", "MC"), ("dee", "dee-961", "DEE-961"),
                 ("dee", "dee-1e5", "DEE-1E5"), ("gmmut", "gmmut", "GMM-UT")]
    else:
        cases = [("mc", None, "MC"), ("dee", None, "DEE"),
                 ("gmmut", None, "GMM-UT")]

    base = builtin_scenarios()[args.scenario]
    all_rows: list[analysis.MomentSummary] = []
    ledgers = []
    reference: dict[float, analysis.MomentSummary] = {}
    scenario_echo = None
    t_start = time.perf_counter()
    for method, case, label in cases:
        if args.paper_scale:
            sc = paper_case(base, case)
        else:
            sc = desk_case(base, method)
        if args.config:
            sc = ScenarioConfig.from_dict({**sc.to_dict(),
                                           **fileio.load_config(args.config)})
        if args.seed is not None:
            sc = dataclasses.replace(sc, seed=args.seed)
        if scenario_echo is None:
            scenario_echo = sc
        rows, _, led = _execute(sc, method, label, args.workers)
        all_rows.extend(rows)
        ledgers.append(led)
        if label == "MC":
            reference = {r.time: r for r in rows}
    wall = time.perf_counter() - t_start

    err_rows = []
    for r in all_rows:
        if r.method == "MC" or r.time not in reference:
            continue
        err_rows.append((r.method, r.time,
                         analysis.relative_errors(reference[r.time], r)))
    fileio.write_moments_csv(out / "moments.csv", all_rows)
    fileio.write_errors_csv(out / "errors.csv", err_rows)
    fileio.write_timing_json(out / "timing.json", ledgers,
                             reference_method="MC")
    fileio.write_manifest(out / "manifest.json", scenario_echo,
                          command="compare",
                          timings={"total_s": wall},
                          extra={"cases": [lab for _, _, lab in cases]})
    for led in ledgers:
        print(f"{led.method}: t_cal={led.t_cal:.2f}s"
              f" (prop {led.t_prop:.2f} + int {led.t_int:.2f})")
    print(f"wrote {out}")
    return 0


def cmd_portrait(args) -> int:
    p = OrbitParams(C=args.C, W=args.W)
    out = fileio.output_root(args.out) / "portrait"
    out.mkdir(parents=True, exist_ok=True)
    points = analysis.find_stationary_points(p)
    fileio.write_stationary_csv(out / "stationary_points.csv", points)

    saddles = [q for q in points if q.kind == "saddle"]
    levels = [1.0 + p.W / 3.0]
    if saddles:
        levels.append(saddles[0].hamiltonian)
    phis, es, h = analysis.hamiltonian_grid(p)
    fileio.write_contours_csv(
        out / "contours.csv",
        [(lvl, analysis.contour_polylines(phis, es, h, lvl)) for lvl in levels])

    labels = []
    for sc in builtin_scenarios().values():
        state = PolarPhaseState(phi=sc.phi0, e=sc.e0)
        labels.append((sc.phi0, sc.e0,
                       analysis.classify_subdomain(state, points, p)))
    fileio.write_labels_csv(out / "labels.csv", labels)

    for q in points:
        print(f"phi={q.phi:.6f} e={q.e:.6f} H={q.hamiltonian:.6f} {q.kind}")
    print(f"wrote {out}")
    return 0


def cmd_split_lib(args) -> int:
    lib = build_split_library(args.n_components)
    out = fileio.output_root(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"split_library_{args.n_components}.csv"
    save_split_library(lib, path)
    print(f"N={args.n_components} sigma={lib.sigma:.6f} wrote {path}")
    return 0


def cmd_validate(args) -> int:
    root = Path(__file__).resolve().parents[2]
    suite = root / "tests" / "test_acceptance.py"
    if not suite.exists():
        print("acceptance suite not found (expected at "
              f"{suite}); run from a source checkout", file=sys.stderr)
        return 2
    return subprocess.run(
        [sys.executable, "-m", "pytest", "-v", str(suite)],
        cwd=str(root)).returncode


def _add_common(sub, *, method: bool) -> None:
    sub.add_argument("--scenario", type=int, choices=(1, 2, 3), default=1)
    if method:
        sub.add_argument("--method", choices=("mc", "dee", "gmmut"),
                         required=True)
    sub.add_argument("--config", default=None,
                     help="YAML file overriding scenario fields")
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--workers", type=int, default=1)
    sub.add_argument("--paper-scale", action="store_true",
                     help="use the published case sizes instead of desk scale")
    sub.add_argument("--out", default=None,
                     help="output root (default $ODL_OUT_DIR or ./out)")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="odlab",
        description="Phase-space density propagation for high "
                    "area-to-mass-ratio orbits")
    subs = parser.add_subparsers(dest="command", required=True)

    run_p = subs.add_parser("run", help="one method on one scenario")
    _add_common(run_p, method=True)
    run_p.set_defaults(func=cmd_run)

    cmp_p = subs.add_parser("compare",
                            help="all methods on one scenario plus error and "
                                 "timing tables")
    _add_common(cmp_p, method=False)
    cmp_p.set_defaults(func=cmd_compare)

    por_p = subs.add_parser("portrait",
                            help="stationary points, contours, region labels")
    por_p.add_argument("--C", type=float, default=0.15)
    por_p.add_argument("--W", type=float, default=0.409)
    por_p.add_argument("--out", default=None)
    por_p.set_defaults(func=cmd_portrait)

    lib_p = subs.add_parser("split-lib", help="build a univariate split library")
    lib_p.add_argument("--n-components", type=int, default=39)
    lib_p.add_argument("--out", default=None)
    lib_p.set_defaults(func=cmd_split_lib)

    val_p = subs.add_parser("validate", help="run the acceptance suite")
    val_p.set_defaults(func=cmd_validate)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"invalid parameters: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
