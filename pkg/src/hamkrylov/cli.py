"""Command-line interface.

Subcommands: ``run`` (execute a configuration, write per-method CSVs, a
summary and figures), ``converge`` (Krylov-dimension sweep), ``invariants``
(property suite with a machine-readable verdict) and ``dump-problem``
(Matrix Market export of a configured problem).

Exit codes: 0 success, 1 configuration error, 2 runtime failure in at least
one method or a failed property.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import mmio
from .errors import ConfigError
from .experiments import OUTPUT_DIR_ENV, load_config, run_experiment
from .invariants import invariant_suite, report_to_json
from .linalg import CsrMatrix


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hamkrylov",
        description="Krylov projection methods for linear Hamiltonian systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment configuration")
    p_run.add_argument("config", type=Path)
    p_run.add_argument("--no-plots", action="store_true", help="skip figure rendering")

    p_conv = sub.add_parser("converge", help="run a Krylov-dimension sweep")
    p_conv.add_argument("config", type=Path)
    p_conv.add_argument("--no-plots", action="store_true")

    p_inv = sub.add_parser("invariants", help="run the property suite")
    p_inv.add_argument("--seed", type=int, default=0)
    p_inv.add_argument("--output", type=Path, default=None)
    p_inv.add_argument(
        "--corrupt",
        action="store_true",
        help="negative control: inject an asymmetric weight matrix",
    )

    p_dump = sub.add_parser(
        "dump-problem", help="export the configured problem as Matrix Market files"
    )
    p_dump.add_argument("config", type=Path)
    p_dump.add_argument("--output", type=Path, default=None)
    return parser


def _cmd_run(args, require_sweep: bool) -> int:
    config = load_config(args.config)
    if require_sweep and not config.is_sweep:
        raise ConfigError("the converge subcommand needs a 'sweep' block")
    report = run_experiment(config, render_plots=not args.no_plots)
    for method, msg in report.errors.items():
        print(f"error [{method}]: {msg}", file=sys.stderr)
    print(f"wrote {len(report.csv_paths)} CSV file(s) to {report.output_dir}")
    return report.exit_code


def _cmd_invariants(args) -> int:
    report = invariant_suite(seed=args.seed, corrupt=args.corrupt)
    outdir = args.output or Path(os.environ.get(OUTPUT_DIR_ENV) or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    target = outdir / "invariants_report.json"
    target.write_text(report_to_json(report))
    for prop in report["properties"]:
        state = "PASS" if prop["passed"] else "FAIL"
        print(f"{state} {prop['id']}  measured={prop['measured']:.3e}"
              f"  tolerance={prop['tolerance']:.3e}")
    n_fail = len(report["failed"])
    print(f"{len(report['properties']) - n_fail} passed, {n_fail} failed -> {target}")
    return 0 if report["passed"] else 2


def _cmd_dump(args) -> int:
    config = load_config(args.config)
    outdir = args.output or config.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    system, y0 = config.problem.build()

    files = {}
    weight = system.weight
    if not isinstance(weight, CsrMatrix):
        weight = CsrMatrix.from_dense(weight)
    mmio.write_sparse(outdir / "weight.mtx", weight, symmetric=True)
    files["weight"] = "weight.mtx"
    if not system.canonical:
        mmio.write_sparse(outdir / "skew.mtx", system.skew)
        files["skew"] = "skew.mtx"
    mmio.write_vector(outdir / "y0.mtx", y0)
    files["y0"] = "y0.mtx"

    sidecar = {
        "family": config.problem.family,
        "dim": system.dim,
        "m": system.half_dim,
        "seed": config.problem.seed,
        "description": system.description,
        "files": files,
    }
    (outdir / "problem.json").write_text(
        json.dumps(sidecar, indent=2, sort_keys=True) + "\n"
    )
    print(f"wrote problem files to {outdir}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args, require_sweep=False)
        if args.command == "converge":
            return _cmd_run(args, require_sweep=True)
        if args.command == "invariants":
            return _cmd_invariants(args)
        if args.command == "dump-problem":
            return _cmd_dump(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError("unreachable")


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
