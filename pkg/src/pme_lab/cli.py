"""Command-line interface for pme-lab."""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any

from pme_lab.config import LabSettings
from pme_lab.exceptions import ConfigError
from pme_lab.runner.experiments import ExperimentResult, run
from pme_lab.runner.loader import build_run_config
from pme_lab.runner.presets import AUDIT_CHECKS, DRIFT_PRESETS, RUN_PRESETS
from pme_lab.types import ExperimentKind, FigureId, InitialPreset, SolverKind

# argparse dest -> (config section, config key)
OVERRIDE_FIELDS = {
    "m": ("model", "m"),
    "q": ("model", "q"),
    "d": ("model", "d"),
    "solver": ("model", "solver"),
    "chemotaxis": ("model", "chemotaxis"),
    "cells": ("grid", "cells"),
    "horizon": ("time", "horizon"),
    "steps": ("time", "steps"),
    "subintervals": ("time", "subintervals"),
    "n_values": ("time", "n_values"),
    "drift": ("drift", "preset"),
    "amplitude": ("drift", "amplitude"),
    "initial": ("initial", "preset"),
    "checks": ("audit", "checks"),
    "refinement": ("audit", "refinement"),
    "r1": ("audit", "r1"),
    "figure": ("experiment", "figure"),
    "resolution": ("experiment", "resolution"),
    "fields": ("output", "fields"),
}


def add_run_args(parser: argparse.ArgumentParser) -> None:
    """Add arguments shared by every experiment command."""
    parser.add_argument("--config", type=Path, help="Run configuration YAML file")
    parser.add_argument("--out", help="Output directory (or set PME_LAB_OUT)")
    parser.add_argument("--m", type=float, help="PME exponent m > 1")
    parser.add_argument("--q", type=float, help="Integrability exponent q >= 1")
    parser.add_argument("--d", type=int, help="Space dimension for exponent formulas")


def add_simulation_args(parser: argparse.ArgumentParser) -> None:
    """Add grid, time, drift and initial-data overrides."""
    parser.add_argument("--preset", choices=sorted(RUN_PRESETS), help="Start from a named scenario")
    parser.add_argument("--cells", type=int, nargs="+", help="Cells per axis")
    parser.add_argument("--horizon", type=float, help="Final time T")
    parser.add_argument("--steps", type=int, help="Number of time steps")
    parser.add_argument("--subintervals", type=int, help="Splitting sub-intervals n")
    parser.add_argument("--drift", choices=DRIFT_PRESETS, help="Drift preset")
    parser.add_argument("--amplitude", type=float, help="Drift amplitude")
    parser.add_argument("--initial", choices=[p.value for p in InitialPreset], help="Initial density preset")
    parser.add_argument(
        "--no-fields",
        dest="fields",
        action="store_const",
        const=False,
        help="Skip plain-text field dumps",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pme-lab",
        description="Porous medium equation with drift: simulations, audits and exponent classes",
    )
    parser.add_argument("--log-level", help="Logging level (or set PME_LAB_LOG_LEVEL)")
    subparsers = parser.add_subparsers(dest="command", required=True)

    simulate_parser = subparsers.add_parser("simulate", help="Run a drifted PME simulation")
    add_run_args(simulate_parser)
    add_simulation_args(simulate_parser)
    simulate_parser.add_argument("--solver", choices=[s.value for s in SolverKind])

    split_parser = subparsers.add_parser("split-study", help="Convergence of the splitting scheme in n")
    add_run_args(split_parser)
    add_simulation_args(split_parser)
    split_parser.add_argument("--n-values", dest="n_values", type=int, nargs="+")

    audit_parser = subparsers.add_parser("audit", help="Audit a priori estimates along a trajectory")
    add_run_args(audit_parser)
    add_simulation_args(audit_parser)
    audit_parser.add_argument("--solver", choices=[s.value for s in SolverKind])
    audit_parser.add_argument("--checks", nargs="+", choices=AUDIT_CHECKS)
    audit_parser.add_argument("--r1", type=float, help="Interpolation exponent r1")
    audit_parser.add_argument(
        "--refinement",
        action="store_const",
        const=True,
        help="Also compare the fitted energy constant on a refined grid",
    )

    regions_parser = subparsers.add_parser("regions", help="Admissible-region diagram data")
    add_run_args(regions_parser)
    regions_parser.add_argument("--figure", choices=[f.value for f in FigureId])
    regions_parser.add_argument("--resolution", type=int, help="Point-cloud lattice size")

    thresholds_parser = subparsers.add_parser("thresholds", help="Threshold exponents at (m, d, q)")
    add_run_args(thresholds_parser)

    ks_parser = subparsers.add_parser("ks", help="Consumption Keller-Segel time series")
    add_run_args(ks_parser)
    add_simulation_args(ks_parser)
    ks_parser.add_argument(
        "--no-chemotaxis",
        dest="chemotaxis",
        action="store_const",
        const=False,
        help="Drop the chemotactic drift",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    """Main entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        settings = LabSettings.from_env(log_level=args.log_level)
    except ConfigError as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return 2
    logging.basicConfig(level=settings.level, format="%(message)s")

    if args.command == "simulate":
        return cmd_simulate(args)
    elif args.command == "split-study":
        return cmd_split_study(args)
    elif args.command == "audit":
        return cmd_audit(args)
    elif args.command == "regions":
        return cmd_regions(args)
    elif args.command == "thresholds":
        return cmd_thresholds(args)
    elif args.command == "ks":
        return cmd_ks(args)
    else:
        print(f"Command '{args.command}' not yet implemented", file=sys.stderr)
        return 1


def _overrides(args: argparse.Namespace) -> dict[str, dict[str, Any]]:
    out: dict[str, dict[str, Any]] = {}
    for dest, (section, key) in OVERRIDE_FIELDS.items():
        value = getattr(args, dest, None)
        if value is not None:
            out.setdefault(section, {})[key] = list(value) if isinstance(value, list) else value
    return out


def _execute(args: argparse.Namespace, kind: ExperimentKind) -> tuple[ExperimentResult, LabSettings]:
    config = build_run_config(
        kind,
        config_path=args.config,
        preset=getattr(args, "preset", None),
        overrides=_overrides(args),
    )
    settings = LabSettings.from_env(out_dir=args.out, config=config)
    return run(config, settings=settings), settings


def _finish(result: ExperimentResult, settings: LabSettings) -> int:
    for line in result.summary:
        print(line)
    print(f"Wrote {len(result.artifacts) + 1} artifacts to {settings.out_dir}")
    return result.exit_code


def cmd_simulate(args: argparse.Namespace) -> int:
    """Run the monolithic or split solver and dump the trajectory."""
    try:
        result, settings = _execute(args, ExperimentKind.SIMULATE)
        return _finish(result, settings)
    except ConfigError as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return 2
    except Exception as e:
        print(f"Simulation error: {e}", file=sys.stderr)
        return 1


def cmd_split_study(args: argparse.Namespace) -> int:
    """Measure how the splitting scheme converges as n grows."""
    try:
        result, settings = _execute(args, ExperimentKind.SPLIT_STUDY)
        return _finish(result, settings)
    except ConfigError as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return 2
    except Exception as e:
        print(f"Split study error: {e}", file=sys.stderr)
        return 1


def cmd_audit(args: argparse.Namespace) -> int:
    """Run the estimate audits; exit 1 if any audit fails."""
    try:
        result, settings = _execute(args, ExperimentKind.AUDIT)
        return _finish(result, settings)
    except ConfigError as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return 2
    except Exception as e:
        print(f"Audit error: {e}", file=sys.stderr)
        return 1


def cmd_regions(args: argparse.Namespace) -> int:
    """Write vertices, polygons and a point cloud of one diagram."""
    try:
        result, settings = _execute(args, ExperimentKind.REGIONS)
        return _finish(result, settings)
    except ConfigError as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return 2
    except Exception as e:
        print(f"Regions error: {e}", file=sys.stderr)
        return 1


def cmd_thresholds(args: argparse.Namespace) -> int:
    """Write every threshold exponent at (m, d, q)."""
    try:
        result, settings = _execute(args, ExperimentKind.THRESHOLDS)
        return _finish(result, settings)
    except ConfigError as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return 2
    except Exception as e:
        print(f"Thresholds error: {e}", file=sys.stderr)
        return 1


def cmd_ks(args: argparse.Namespace) -> int:
    """Run the Keller-Segel model and audit its Lyapunov structure."""
    try:
        result, settings = _execute(args, ExperimentKind.KS)
        return _finish(result, settings)
    except ConfigError as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return 2
    except Exception as e:
        print(f"Keller-Segel error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
