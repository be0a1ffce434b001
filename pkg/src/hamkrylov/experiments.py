"""Configuration-driven experiment execution.

A run configuration is a single JSON document; unknown keys are rejected so
typos cannot silently alter tolerance-sensitive experiments.  A ``sweep``
block turns the configuration into a convergence study.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, HamKrylovError
from .linalg import CayleyPropagator
from .problems import ProblemSpec
from .projections import ALL_METHODS, reference_solution, run_method
from .reporting import (
    render_convergence_figure,
    render_run_figures,
    write_convergence_csv,
    write_json,
    write_trajectory_csv,
)

_TOP_KEYS = {
    "problem",
    "methods",
    "krylov_dim",
    "horizon",
    "step",
    "restart",
    "diagnostics",
    "output_dir",
    "seed",
    "sweep",
}
_PROBLEM_KEYS = {"family", "m", "grid_n", "seed", "initial"}
_DIAG_KEYS = {"energy", "integrals", "global_error"}

OUTPUT_DIR_ENV = "HK_OUTPUT_DIR"


@dataclass(frozen=True)
class ExperimentConfig:
    problem: ProblemSpec
    methods: tuple
    horizon: float
    step: float
    output_dir: Path
    krylov_dim: int | None = None
    restart: float | None = None
    integrals: tuple = ()
    global_error: bool = False
    seed: int = 0
    sweep: tuple | None = None

    @property
    def is_sweep(self) -> bool:
        return self.sweep is not None


def _is_index(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _reject_unknown(mapping: dict, allowed: set, where: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"unknown {where} keys: {sorted(unknown)}")


def _parse_problem(raw) -> ProblemSpec:
    if not isinstance(raw, dict):
        raise ConfigError("'problem' must be an object")
    _reject_unknown(raw, _PROBLEM_KEYS, "problem")
    if "family" not in raw:
        raise ConfigError("'problem.family' is required")
    try:
        return ProblemSpec(
            family=raw["family"],
            m=raw.get("m"),
            grid_n=raw.get("grid_n"),
            seed=int(raw.get("seed", 0)),
            initial=raw.get("initial"),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def parse_config(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    _reject_unknown(raw, _TOP_KEYS, "configuration")
    for key in ("problem", "methods", "horizon", "step", "output_dir"):
        if key not in raw:
            raise ConfigError(f"'{key}' is required")

    problem = _parse_problem(raw["problem"])

    methods = raw["methods"]
    if not isinstance(methods, list) or not methods:
        raise ConfigError("'methods' must be a nonempty list")
    if len(set(methods)) != len(methods):
        raise ConfigError("'methods' contains duplicates")
    for m in methods:
        if m not in ALL_METHODS:
            raise ConfigError(f"unknown method {m!r}; choose from {list(ALL_METHODS)}")

    horizon = float(raw["horizon"])
    step = float(raw["step"])
    if step <= 0:
        raise ConfigError("'step' must be positive")
    if horizon < step:
        raise ConfigError("'horizon' must be at least one step")

    sweep = raw.get("sweep")
    krylov_dim = raw.get("krylov_dim")
    restart = raw.get("restart")

    diagnostics = raw.get("diagnostics", {})
    if not isinstance(diagnostics, dict):
        raise ConfigError("'diagnostics' must be an object")
    _reject_unknown(diagnostics, _DIAG_KEYS, "diagnostics")
    if diagnostics.get("energy", True) is not True:
        raise ConfigError("energy diagnostics cannot be disabled")
    integrals = diagnostics.get("integrals", [])
    if not isinstance(integrals, list) or any(
        not _is_index(k) or k < 0 for k in integrals
    ):
        raise ConfigError("'diagnostics.integrals' must be a list of indices >= 0")
    global_error = diagnostics.get("global_error", False)
    if not isinstance(global_error, bool):
        raise ConfigError("'diagnostics.global_error' must be a boolean")

    output_dir = Path(os.environ.get(OUTPUT_DIR_ENV) or raw["output_dir"])

    if sweep is not None:
        if krylov_dim is not None:
            raise ConfigError("'sweep' and 'krylov_dim' are mutually exclusive")
        if restart is not None:
            raise ConfigError("a convergence sweep does not take 'restart'")
        if not isinstance(sweep, list) or not sweep:
            raise ConfigError("'sweep' must be a nonempty list of dimensions")
        if any(not _is_index(d) or d < 2 for d in sweep):
            raise ConfigError("sweep entries must be integers >= 2")
        sweep = tuple(sorted(set(sweep)))
        if any(m in ("SLPM", "BJPM") for m in methods) and any(
            d % 2 for d in sweep
        ):
            raise ConfigError("SLPM/BJPM sweeps need even dimensions")
        if "Reference" in methods or "SpecialMR" in methods:
            raise ConfigError("a convergence sweep compares projection methods only")
    else:
        if krylov_dim is None:
            raise ConfigError("'krylov_dim' is required (or provide a 'sweep')")
        if not _is_index(krylov_dim) or krylov_dim < 2:
            raise ConfigError("'krylov_dim' must be an integer >= 2")
        if restart is not None:
            restart = float(restart)
            if restart <= 0:
                raise ConfigError("'restart' must be positive")
            n_steps = round(restart / step)
            if n_steps < 1 or abs(restart - n_steps * step) > 1e-9 * max(restart, step):
                raise ConfigError("'restart' must be an integer multiple of 'step'")
            n_int = round(horizon / restart)
            if n_int < 1 or abs(horizon - n_int * restart) > 1e-9 * max(horizon, restart):
                raise ConfigError("'horizon' must be an integer multiple of 'restart'")

    return ExperimentConfig(
        problem=problem,
        methods=tuple(methods),
        horizon=horizon,
        step=step,
        output_dir=output_dir,
        krylov_dim=krylov_dim,
        restart=restart,
        integrals=tuple(integrals),
        global_error=bool(global_error),
        seed=int(raw.get("seed", 0)),
        sweep=tuple(sweep) if sweep is not None else None,
    )


def load_config(path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read configuration: {exc}") from exc
    return parse_config(raw)


@dataclass
class RunReport:
    output_dir: Path
    csv_paths: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return 2 if self.errors else 0


def _validate_against_system(config: ExperimentConfig, dim: int) -> None:
    dims = config.sweep if config.is_sweep else (config.krylov_dim,)
    for d in dims:
        if d > dim:
            raise ConfigError(
                f"krylov dimension {d} exceeds the system dimension {dim}"
            )


def run_experiment(config: ExperimentConfig, render_plots: bool = True) -> RunReport:
    """Execute one run configuration: reference first, then each method."""
    if config.is_sweep:
        return convergence_study(config, render_plots=render_plots)

    system, y0 = config.problem.build()
    _validate_against_system(config, system.dim)
    outdir = config.output_dir
    outdir.mkdir(parents=True, exist_ok=True)

    report = RunReport(output_dir=outdir)
    timings: dict = {}
    records: dict = {}

    need_reference = config.global_error or "Reference" in config.methods
    reference_record = None
    reference_prop = None
    if need_reference:
        t0 = time.perf_counter()
        try:
            reference_record = reference_solution(
                system, y0, config.step, config.horizon, integrals=config.integrals
            )
            if config.global_error:
                reference_prop = CayleyPropagator(system.materialize_a(), config.step)
        except (HamKrylovError, ValueError, np.linalg.LinAlgError) as exc:
            report.errors["Reference"] = f"{type(exc).__name__}: {exc}"
        timings["reference"] = time.perf_counter() - t0

    for method in config.methods:
        if method == "Reference" and "Reference" in report.errors:
            continue
        t0 = time.perf_counter()
        try:
            if method == "Reference":
                record = reference_record
            else:
                record = run_method(
                    system,
                    y0,
                    method,
                    config.krylov_dim,
                    config.horizon,
                    config.step,
                    restart=config.restart,
                    integrals=config.integrals,
                    reference=reference_prop,
                )
        except (HamKrylovError, ValueError, np.linalg.LinAlgError) as exc:
            report.errors[method] = f"{type(exc).__name__}: {exc}"
            timings[method] = time.perf_counter() - t0
            continue
        timings[method] = time.perf_counter() - t0
        records[method] = record
        csv_path = outdir / f"{method.lower()}.csv"
        write_trajectory_csv(csv_path, record, config.integrals)
        report.csv_paths[method] = csv_path

    summary = {
        "problem": config.problem.label(),
        "horizon": config.horizon,
        "step": config.step,
        "krylov_dim": config.krylov_dim,
        "restart": config.restart,
        "methods": {},
        "errors": dict(report.errors),
        "timings_seconds": {k: round(v, 6) for k, v in timings.items()},
        "exit_code": report.exit_code,
    }
    for method, record in records.items():
        entry = {
            "csv": report.csv_paths[method].name,
            "basis_dim": record.meta["basis_dim"],
            "max_abs_energy_error": record.max_abs_energy_error(),
            "projection_defect": record.meta["projection_defect"],
            "breakdown_events": record.meta["breakdown_events"],
            "integrals_preserved": record.meta["integrals_preserved"],
            "max_integral_drift": {
                str(k): record.max_integral_drift(k) for k in config.integrals
            },
        }
        if record.global_error is not None:
            entry["final_global_error"] = float(record.global_error[-1])
        summary["methods"][method] = entry
    report.summary = summary
    write_json(outdir / "summary.json", summary)

    if render_plots and records:
        render_run_figures(outdir, records, config.integrals)
    return report


def convergence_study(config: ExperimentConfig, render_plots: bool = True) -> RunReport:
    """Final-time global error for each (method, dimension) in the sweep."""
    system, y0 = config.problem.build()
    _validate_against_system(config, system.dim)
    outdir = config.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    report = RunReport(output_dir=outdir)

    try:
        reference_record = reference_solution(system, y0, config.step, config.horizon)
    except (HamKrylovError, ValueError, np.linalg.LinAlgError) as exc:
        report.errors["Reference"] = f"{type(exc).__name__}: {exc}"
        report.summary = {"errors": dict(report.errors), "exit_code": 2}
        write_json(outdir / "convergence_summary.json", report.summary)
        return report
    y_ref_final = reference_record.final_state

    rows = []
    for method in config.methods:
        errors = []
        entries = []
        for dim in config.sweep:
            try:
                record = run_method(
                    system, y0, method, dim, config.horizon, config.step
                )
            except (HamKrylovError, ValueError, np.linalg.LinAlgError) as exc:
                report.errors[f"{method}@{dim}"] = f"{type(exc).__name__}: {exc}"
                continue
            err = float(np.linalg.norm(record.final_state - y_ref_final))
            errors.append(err)
            entries.append(
                {
                    "method": method,
                    "krylov_dim": dim,
                    "basis_dim": record.meta["basis_dim"],
                    "final_global_error": err,
                }
            )
        monotone = all(
            errors[i + 1] <= max(errors[i], 1e-13) for i in range(len(errors) - 1)
        )
        for entry in entries:
            entry["monotone_ok"] = monotone
        rows.extend(entries)

    csv_path = outdir / "convergence.csv"
    write_convergence_csv(csv_path, rows)
    report.csv_paths["convergence"] = csv_path
    report.summary = {
        "problem": config.problem.label(),
        "horizon": config.horizon,
        "step": config.step,
        "sweep": list(config.sweep),
        "rows": rows,
        "errors": dict(report.errors),
        "exit_code": report.exit_code,
    }
    write_json(outdir / "convergence_summary.json", report.summary)
    if render_plots and rows:
        render_convergence_figure(outdir, rows)
    return report
