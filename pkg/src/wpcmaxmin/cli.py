"""Command-line harness: single runs, sweeps, and complexity reports.

Exit codes: 0 on success, 2 when every requested run was infeasible, and 1
on errors (bad arguments, unreadable spec files, I/O failures).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import MODES
from .experiments import (ExperimentSpec, ExperimentTable, base_config,
                          complexity_report, emit_results, run_experiment,
                          run_single)
from .optimizer import VARIANTS, OptimizerSettings

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage failures exit with the error code.

    The default parser exits with status 2, which this tool reserves for
    infeasible-only results.
    """

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_ERROR)


def _seed_list(text: str) -> list:
    try:
        return [int(part) for part in text.split(",") if part != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"seeds must be a comma-separated integer list, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="wpcmaxmin",
        description="Max-min rate optimization for wireless-powered pairs "
                    "assisted by an amplifying relay or an active surface.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--mode", choices=MODES, default=None,
                       help="front-end kind (default relay)")
        p.add_argument("--variant", choices=VARIANTS, default=None,
                       help="structural variant (default full)")
        p.add_argument("--seeds", type=_seed_list, default=None,
                       metavar="S0,S1,...",
                       help="comma-separated channel seeds (default 0)")
        p.add_argument("--spec", default=None, metavar="FILE",
                       help="JSON spec file; command-line flags override it")
        p.add_argument("--out", default=None, metavar="DIR",
                       help="output directory for CSV/JSON results")

    run_p = sub.add_parser(
        "run", help="optimize one scenario for one or more seeds")
    common(run_p)
    run_p.add_argument("--profile", choices=("desk", "reference"),
                       default=None, help="scenario scale (default desk)")
    run_p.add_argument("--e-min", type=float, default=None, dest="e_min",
                       help="energy floor override [J]")

    sweep_p = sub.add_parser(
        "sweep", help="run the sweep described by a JSON spec file")
    common(sweep_p)

    cx_p = sub.add_parser(
        "complexity", help="per-step cost estimates for a scenario")
    common(cx_p)
    cx_p.add_argument("--profile", choices=("desk", "reference"),
                      default=None, help="scenario scale (default desk)")
    cx_p.add_argument("--measure", action="store_true",
                      help="also run the first seed and report wall times")
    return parser


def _load_spec(args, single_run: bool) -> ExperimentSpec:
    """ExperimentSpec from --spec JSON plus command-line overrides.

    With ``single_run`` a missing sweep section degenerates to the chosen
    variant as a one-value axis; otherwise the spec file must define one.
    """
    data = {}
    if args.spec is not None:
        try:
            data = json.loads(Path(args.spec).read_text())
        except OSError as exc:
            raise RuntimeError(f"cannot read spec file {args.spec}: {exc}")
        except json.JSONDecodeError as exc:
            raise RuntimeError(f"spec file {args.spec} is not valid JSON: "
                               f"{exc}")
        if not isinstance(data, dict):
            raise RuntimeError("spec file must hold a JSON object")
    if args.mode is not None:
        data["mode"] = args.mode
    if args.variant is not None:
        data["variant"] = args.variant
    if args.seeds is not None:
        data["seeds"] = args.seeds
    if args.out is not None:
        data["outputs"] = args.out
    data.setdefault("seeds", [0])
    profile = getattr(args, "profile", None)
    if profile is not None:
        data["profile"] = profile
    e_min = getattr(args, "e_min", None)
    if e_min is not None:
        config = data.get("config", {})
        if not isinstance(config, dict):
            raise RuntimeError("spec field 'config' must be an object")
        config = dict(config)
        config["e_min"] = e_min
        data["config"] = config
    if single_run and "sweep" not in data:
        data["sweep"] = {"axis": "variant",
                         "values": [data.get("variant", "full")]}
    try:
        return ExperimentSpec.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise RuntimeError(f"invalid experiment spec: {exc}")


def _table_exit_code(table: ExperimentTable) -> int:
    return EXIT_OK if any(r.feasible for r in table.rows) else EXIT_INFEASIBLE


def _print_table(table: ExperimentTable, stream) -> None:
    for row in table.rows:
        if row.feasible:
            print(f"{table.spec.sweep_axis}={row.sweep} seed={row.seed}: "
                  f"{row.status}, min-rate {row.min_rate:.6f}, "
                  f"tau {row.tau:.6f}, {row.iters} outer rounds, "
                  f"{row.ms:.0f} ms", file=stream)
        else:
            print(f"{table.spec.sweep_axis}={row.sweep} seed={row.seed}: "
                  f"{row.status} after {row.iters} rounds, {row.ms:.0f} ms",
                  file=stream)
    for agg in table.aggregates:
        mean = ("none feasible" if agg["mean_min_rate"] is None
                else f"mean min-rate {agg['mean_min_rate']:.6f} "
                     f"(stderr {agg['stderr_min_rate']:.6f})")
        print(f"{table.spec.sweep_axis}={agg['value']}: {mean} over "
              f"{agg['feasible']}/{agg['count']} feasible seeds",
              file=stream)


def _cmd_run(args) -> int:
    spec = _load_spec(args, single_run=True)
    table = run_experiment(spec)
    _print_table(table, sys.stdout)
    if spec.outputs is not None:
        paths = emit_results(table)
        for kind in sorted(paths):
            print(f"wrote {paths[kind]}")
    return _table_exit_code(table)


def _cmd_sweep(args) -> int:
    if args.spec is None:
        raise RuntimeError("sweep requires --spec FILE")
    spec = _load_spec(args, single_run=False)
    table = run_experiment(spec)
    _print_table(table, sys.stdout)
    if spec.outputs is not None:
        paths = emit_results(table)
        for kind in sorted(paths):
            print(f"wrote {paths[kind]}")
    return _table_exit_code(table)


def _cmd_complexity(args) -> int:
    spec = _load_spec(args, single_run=True)
    variant = spec.variant if spec.sweep_axis != "variant" \
        else str(spec.sweep_values[0])
    cfg = base_config(spec)
    measured = None
    if args.measure:
        fields, trace = run_single(cfg, spec.seeds[0],
                                   OptimizerSettings(variant=variant))
        measured = {
            "status": fields["status"],
            "outer_iterations": fields["iters"],
            "total_ms": fields["ms"],
        }
        if trace is not None and trace.rows:
            measured["mean_round_ms"] = float(
                sum(r.wall_ms for r in trace.rows) / len(trace.rows))
            measured["newton_steps"] = int(
                sum(r.newton_steps for r in trace.rows))
    print(complexity_report(cfg, variant, measured), end="")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_ERROR
    handlers = {"run": _cmd_run, "sweep": _cmd_sweep,
                "complexity": _cmd_complexity}
    try:
        return handlers[args.command](args)
    except (RuntimeError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
