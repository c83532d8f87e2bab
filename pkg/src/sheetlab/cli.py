"""Scenario-driven command line front end.

Configs are flat ``key = value`` text files with bracketed sections. Three
pipelines are provided:

  slit_energy   evolve -> traces -> pressure -> slit identities -> energy ledger
  regularity    sample the sheet field -> dyadic flux + structure function
  criterion     shrinking-neighborhood sweep on declared singular sets

Exit codes: 0 all checks pass, 1 a verification check failed, 2 config
error, 3 numerical abort (singularity diagnostic).
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field, fields as dc_fields
from pathlib import Path

import numpy as np

from .biot_savart import BlobParameter, mean_velocity_rhs, one_sided_limits
from .field_analysis import (DyadicPartition, dyadic_flux, plateau_ratio,
                             sample_sheet_velocity, save_table_csv,
                             structure_function, offset_length, riesz_pressure)
from .geometry import VortexSheet, build_frame, sheet_from_functions, sheet_measure
from .potential_pressure import sheet_pressure
from .sheet_dynamics import SingularityAbort, Trajectory, evolve
from .verification import (SingularSetSpec, TubeSpec, VerificationReport,
                           energy_ledger, neighborhood_criterion,
                           save_convergence_csv, slit_report)

PIPELINES = ("slit_energy", "regularity", "criterion")
SHEET_KINDS = ("flat_uniform", "zero_circulation", "perturbed_analytic")


class ConfigError(ValueError):
    pass


@dataclass
class ScenarioConfig:
    name: str = "scenario"
    pipeline: str = "slit_energy"
    # sheet initial data
    kind: str = "zero_circulation"
    amplitude: float = 0.0
    mode: int = 1
    # numerical parameters
    n_nodes: int = 256
    delta: float = 0.0
    dt: float = 1e-3
    t_end: float = 0.0
    filter_threshold: float = 1e-13
    grid_m: int = 256
    grid_my: int = 256
    y_max: float = 6.0
    tube_eps1: float = 0.5
    eps_list: tuple = (0.4, 0.2, 0.1, 0.05)
    q_exponent: float = 6.0
    gamma_exponent: float = 1.0
    # tolerances
    normal_continuity: float = 1e-7
    pressure_continuity: float = 1e-6
    kinematic_identity: float = 1e-5
    energy_value: float = 1e-3
    energy_drift: float = 1e-4
    plateau_factor: float = 2.0
    slope_tolerance: float = 0.1
    # output
    directory: str = "out"

    def validate(self):
        if self.pipeline not in PIPELINES:
            raise ConfigError(f"unknown pipeline {self.pipeline!r}")
        if self.kind not in SHEET_KINDS:
            raise ConfigError(f"unknown sheet kind {self.kind!r}")
        positive = ("n_nodes", "dt", "grid_m", "grid_my", "y_max", "tube_eps1",
                    "q_exponent", "gamma_exponent", "normal_continuity",
                    "pressure_continuity", "kinematic_identity", "energy_value",
                    "energy_drift", "plateau_factor", "slope_tolerance")
        for key in positive:
            if getattr(self, key) <= 0:
                raise ConfigError(f"parameter {key} must be positive, "
                                  f"got {getattr(self, key)}")
        for key in ("delta", "t_end", "amplitude", "filter_threshold"):
            if getattr(self, key) < 0:
                raise ConfigError(f"parameter {key} must be nonnegative, "
                                  f"got {getattr(self, key)}")
        if any(e <= 0 for e in self.eps_list):
            raise ConfigError("eps_list entries must be positive")
        if 0 < self.t_end < 2 * self.dt:
            raise ConfigError("t_end must be zero or at least 2 dt")
        return self


_SECTION_KEYS = {
    "scenario": ("name", "pipeline"),
    "sheet": ("kind", "amplitude", "mode"),
    "numerics": ("n_nodes", "delta", "dt", "t_end", "filter_threshold",
                 "grid_m", "grid_my", "y_max", "tube_eps1", "eps_list",
                 "q_exponent", "gamma_exponent"),
    "tolerances": ("normal_continuity", "pressure_continuity",
                   "kinematic_identity", "energy_value", "energy_drift",
                   "plateau_factor", "slope_tolerance"),
    "output": ("directory",),
}


def parse_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    cfg = ScenarioConfig()
    types = {f.name: f.type for f in dc_fields(ScenarioConfig)}
    section = None
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SECTION_KEYS:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if section is None:
            raise ConfigError(f"line {lineno}: key {key!r} outside any section")
        if key not in _SECTION_KEYS[section]:
            raise ConfigError(f"line {lineno}: unknown key {key!r} in "
                              f"section [{section}]")
        try:
            if key == "eps_list":
                value = tuple(float(v) for v in val.split(","))
            elif types[key] in ("int", int):
                value = int(val)
            elif types[key] in ("float", float):
                value = float(val)
            else:
                value = val
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: cannot parse {key!r}: {exc}") from exc
        setattr(cfg, key, value)
    return cfg.validate()


def build_initial_sheet(cfg: ScenarioConfig) -> VortexSheet:
    mode = cfg.mode
    if cfg.kind == "flat_uniform":
        return sheet_from_functions(cfg.n_nodes, lambda a: np.ones_like(a))
    if cfg.kind == "zero_circulation":
        return sheet_from_functions(cfg.n_nodes, lambda a: np.sin(mode * a),
                                    finite_energy=True)
    return sheet_from_functions(cfg.n_nodes, lambda a: np.sin(mode * a),
                                h=lambda a: cfg.amplitude * np.sin(mode * a),
                                finite_energy=True)


def _out_dir(cfg: ScenarioConfig) -> Path:
    base = os.environ.get("OUT_DIR", cfg.directory)
    out = Path(base) / cfg.name
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(cfg: ScenarioConfig, out: Path):
    lines = [f"{f.name} = {getattr(cfg, f.name)!r}" for f in dc_fields(cfg)]
    (out / "manifest.txt").write_text("\n".join(lines) + "\n")


def run_slit_energy(cfg: ScenarioConfig, out: Path) -> VerificationReport:
    sheet0 = build_initial_sheet(cfg)
    blob = BlobParameter(cfg.delta)
    report = VerificationReport()
    if cfg.t_end > 0:
        traj = evolve(sheet0, blob, cfg.dt, cfg.t_end, cfg.filter_threshold)
    else:
        # static scenario: synthesize a three-snapshot window at rest
        snaps = [VortexSheet(sheet0.alpha, sheet0.position, sheet0.gamma,
                             k * cfg.dt, sheet0.finite_energy) for k in range(3)]
        traj = Trajectory(snaps, cfg.dt, blob, cfg.filter_threshold)
    traj.save(out / "trajectory")

    mid = len(traj) - 2 if len(traj) >= 3 else 1
    window = traj.window(mid)
    sheet = window[1]
    frame = build_frame(sheet)
    traces = one_sided_limits(sheet)
    _, ptraces = sheet_pressure(sheet, traces, y_ref=cfg.y_max)
    mu = sheet_measure(window)
    motion = mean_velocity_rhs(sheet, blob)
    report.extend(slit_report(
        sheet, traces, ptraces, mu, frame,
        tolerances={"normal_continuity": cfg.normal_continuity,
                    "pressure_continuity": cfg.pressure_continuity,
                    "kinematic_identity": cfg.kinematic_identity},
        motion_velocity=motion))

    ledger = energy_ledger(traj, y_max=cfg.y_max)
    rows = [{"time": t, "e_kernel": e}
            for t, e in zip(ledger.times, ledger.e_kernel)]
    save_convergence_csv(rows, out / "energy_series.csv")
    for note in ledger.warnings:
        report.notes.append(note)
    if abs(ledger.circulation) <= 1e-10:
        e0 = next(iter(ledger.e_grid.values()))
        report.add("energy", "kernel_energy_initial_vs_reference",
                   abs(ledger.initial_energy - np.pi / 2), cfg.energy_value,
                   note=f"E_kernel(0) = {ledger.initial_energy!r}")
        report.add("energy", "grid_energy_initial_vs_reference",
                   abs(e0 - np.pi / 2), cfg.energy_value,
                   note=f"E_grid(0) = {e0!r}")
        report.add("energy", "estimator_cross_agreement",
                   abs(e0 - ledger.initial_energy) / abs(ledger.initial_energy),
                   1e-3)
    report.add("energy", "relative_drift", ledger.drift, cfg.energy_drift,
               note="blob pair energy" if cfg.delta > 0 else "kernel energy")
    return report


def run_regularity(cfg: ScenarioConfig, out: Path) -> VerificationReport:
    sheet = build_initial_sheet(cfg)
    report = VerificationReport()
    fld = sample_sheet_velocity(sheet, cfg.grid_m, cfg.grid_my, cfg.y_max)
    part = DyadicPartition.for_field(fld)
    flux = dyadic_flux(fld, part)
    save_table_csv({f"flux_q{q}": v for q, v in flux.items()},
                   out / "dyadic_flux.csv")
    ratio = plateau_ratio(flux, part)
    report.add("regularity", "dyadic_flux_plateau_factor", ratio,
               cfg.plateau_factor,
               note=f"last resolved octave q={part.q_resolved}")
    offsets = [(0, 4), (0, 2), (0, 1)]
    s3 = structure_function(fld, offsets)
    rows = []
    for o in offsets:
        y_len = offset_length(fld, o)
        rows.append({"offset_cells": o[1], "y": y_len, "s3": s3[o],
                     "s3_over_y": s3[o] / y_len})
    save_convergence_csv(rows, out / "structure_function.csv")
    vals = [r["s3_over_y"] for r in rows]
    extrap = 2.0 * vals[-1] - vals[-2]      # first-order Richardson to y -> 0
    report.add("regularity", "s3_plateau_positive", extrap, 1e-6, mode="ge",
               note=f"S3/|y| -> {extrap!r}")
    p = riesz_pressure(fld)
    report.add("regularity", "riesz_pressure_zero_mean",
               abs(float(p.data.mean())), 1e-12)
    return report


def run_criterion(cfg: ScenarioConfig, out: Path) -> VerificationReport:
    sheet = build_initial_sheet(cfg)
    report = VerificationReport()
    fld = sample_sheet_velocity(sheet, cfg.grid_m, cfg.grid_my, cfg.y_max)
    specs = {
        "point": SingularSetSpec.point(0.0, 0.0, cfg.gamma_exponent),
        "slit": SingularSetSpec.from_sheet(sheet, cfg.gamma_exponent),
    }
    tube = TubeSpec(cfg.tube_eps1)
    for label, spec in specs.items():
        res = neighborhood_criterion(fld, spec, cfg.eps_list, cfg.q_exponent,
                                     mixed_norm_tube=tube)
        save_convergence_csv(res["rows"], out / f"criterion_{label}.csv")
        report.add("criterion", f"{label}_A_eps_slope_error",
                   abs(res["A_slope"] - res["A_slope_expected"]),
                   cfg.slope_tolerance,
                   note=f"measured {res['A_slope']!r}")
        report.add("criterion", f"{label}_quantities_monotone",
                   1.0 if (res["monotone1"] and res["monotone2"]) else 0.0,
                   1.0, mode="ge",
                   note=f"admissible: {res['admissible']}")
        if "mixed_norm" in res:
            finite = np.isfinite(res["mixed_norm"])
            report.add("criterion", f"{label}_mixed_norm_finite",
                       1.0 if finite else 0.0, 1.0, mode="ge",
                       note=f"value {res['mixed_norm']!r}")
    return report


def run_scenario(cfg: ScenarioConfig) -> int:
    out = _out_dir(cfg)
    _write_manifest(cfg, out)
    runner = {"slit_energy": run_slit_energy, "regularity": run_regularity,
              "criterion": run_criterion}[cfg.pipeline]
    try:
        report = runner(cfg, out)
    except SingularityAbort as exc:
        (out / "report.txt").write_text(f"ABORT: {exc}\n")
        print(f"numerical abort: {exc}", file=sys.stderr)
        return 3
    report.save(out / "report.txt")
    print(report.to_text(), end="")
    return 0 if report.passed else 1


def list_scenarios() -> str:
    lines = ["pipelines:"]
    lines.append("  slit_energy   evolve the sheet, verify the slit identities "
                 "and the energy ledger")
    lines.append("  regularity    sample the induced field, dyadic flux and "
                 "third-order structure function")
    lines.append("  criterion     shrinking-neighborhood quantities on declared "
                 "singular sets")
    lines.append("sheet kinds:")
    lines.append("  flat_uniform        h = 0, gamma = 1 (infinite energy, "
                 "local balance only)")
    lines.append("  zero_circulation    h = 0, gamma = sin(mode a)")
    lines.append("  perturbed_analytic  h = amplitude sin(mode a), "
                 "gamma = sin(mode a)")
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="sheetlab",
                                     description="vortex-sheet scenario runner")
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run a scenario config")
    run_p.add_argument("config")
    val_p = sub.add_parser("validate", help="validate a scenario config")
    val_p.add_argument("config")
    sub.add_parser("list-scenarios", help="list pipelines and sheet kinds")
    args = parser.parse_args(argv)

    if args.command == "list-scenarios":
        print(list_scenarios())
        return 0
    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.command == "validate":
        print(f"config ok: scenario {cfg.name!r}, pipeline {cfg.pipeline!r}")
        return 0
    return run_scenario(cfg)


if __name__ == "__main__":
    sys.exit(main())
