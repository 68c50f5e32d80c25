"""Command-line interface.

Subcommands: validate, steady, transient, place-sensors, pdn, compare,
report. Exit codes: 0 success, 1 validation failure, 2 numerical
failure, 3 IO failure. STACKEMU_THREADS caps BLAS worker count
(0 = auto).
"""

from __future__ import annotations

import argparse
import os
import sys

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3


def _apply_thread_cap():
    cap = os.environ.get("STACKEMU_THREADS")
    if cap and cap != "0":
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ.setdefault(var, cap)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="stackemu",
        description="3D chip-stack thermal/noise/reliability scenario "
                    "runner")
    p.add_argument("--config", required=True, help="scenario YAML path")
    p.add_argument("--out", default="stackemu_out",
                   help="output path prefix")
    p.add_argument("--seed", type=int, default=None,
                   help="override the scenario seed")
    p.add_argument("--deterministic", action="store_true",
                   help="force deterministic solves")
    p.add_argument("--force", action="store_true",
                   help="overwrite existing output files")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", help="check the configuration and stack")
    sub.add_parser("steady", help="steady-state solve and report")
    sub.add_parser("transient", help="transient run (with policy) and report")
    pl = sub.add_parser("place-sensors", help="greedy sensor placement")
    pl.add_argument("--k", type=int, default=8, help="sensor count")
    sub.add_parser("pdn", help="IR-drop analysis only")
    cmp_p = sub.add_parser("compare", help="compare multiple scenarios")
    cmp_p.add_argument("--with", dest="others", action="append", default=[],
                       help="additional scenario YAML (repeatable)")
    sub.add_parser("report", help="full pipeline and all exports")
    return p


def _load(args):
    from dataclasses import replace

    from .config import load_scenario

    scenario = load_scenario(args.config)
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    if args.deterministic:
        scenario = replace(scenario,
                           solve=replace(scenario.solve, deterministic=True))
    return scenario


def main(argv=None) -> int:
    _apply_thread_cap()
    args = _parser().parse_args(argv)

    from .config import ConfigError
    from .scenario import ExportError, StageError
    from .solver import ConvergenceError, NumericalError

    try:
        return _dispatch(args)
    except (ConfigError, ValueError) as e:
        print(f"validation error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ConvergenceError, NumericalError) as e:
        print(f"numerical error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except StageError as e:
        kind = EXIT_NUMERICAL if isinstance(
            e.cause, (ConvergenceError, NumericalError)) else EXIT_VALIDATION
        print(f"error: {e}", file=sys.stderr)
        return kind
    except (ExportError, OSError) as e:
        print(f"io error: {e}", file=sys.stderr)
        return EXIT_IO


def _dispatch(args) -> int:
    from dataclasses import replace

    from .scenario import (compare_scenarios, export, render_comparison,
                           render_report, run_scenario)
    from .stack import validate_stack

    scenario = _load(args)

    if args.command == "validate":
        violations = validate_stack(scenario.stack)
        if violations:
            for v in violations:
                print(f"layer {v.layer_index}: [{v.code}] {v.message}")
            return EXIT_VALIDATION
        print("ok")
        return EXIT_OK

    if args.command == "steady":
        scenario = replace(scenario, transient=None, policy=None)
        report = run_scenario(scenario)
        export(report, "text", args.out, args.force)
        export(report, "csv", args.out, args.force)
        print(render_report(report), end="")
        return EXIT_OK

    if args.command == "transient":
        if scenario.transient is None:
            print("validation error: scenario has no transient section",
                  file=sys.stderr)
            return EXIT_VALIDATION
        report = run_scenario(scenario)
        export(report, "text", args.out, args.force)
        export(report, "csv", args.out, args.force)
        print(render_report(report), end="")
        return EXIT_OK

    if args.command == "place-sensors":
        from .power import power_density_field
        from .sensors import (place_sensors_greedy, placement_to_csv,
                              tile_center_candidates)
        from .solver import assemble, solve_steady
        from .stack import discretize

        grid = discretize(scenario.stack, scenario.grid.nx, scenario.grid.ny,
                          scenario.grid.sub_slabs_per_layer)
        system = assemble(grid, scenario.stack)
        steady = solve_steady(
            system, power_density_field(scenario.power, grid, 0.0),
            scenario.solve)
        candidates = tile_center_candidates(grid)
        chosen = place_sensors_greedy(candidates, args.k, [steady], grid)
        path = f"{args.out}_placement.csv"
        if os.path.exists(path) and not args.force:
            print(f"io error: refusing to overwrite {path}", file=sys.stderr)
            return EXIT_IO
        placement_to_csv(chosen, path)
        for layer, x, y in chosen:
            print(f"layer={layer} x_mm={x:.3f} y_mm={y:.3f}")
        return EXIT_OK

    if args.command == "pdn":
        if scenario.pdn is None:
            print("validation error: scenario has no pdn section",
                  file=sys.stderr)
            return EXIT_VALIDATION
        scenario = replace(scenario, transient=None, policy=None,
                           sensors=None, reliability=None)
        report = run_scenario(scenario)
        export(report, "text", args.out, args.force)
        export(report, "pgm", args.out, args.force)
        for p, d in enumerate(report.pdn_summary.max_drop_per_plane):
            print(f"plane {p}: max_drop_v={d!r}")
        return EXIT_OK

    if args.command == "compare":
        from .config import load_scenario
        scenarios = [scenario] + [load_scenario(p) for p in args.others]
        rows = compare_scenarios(scenarios)
        text = render_comparison(rows)
        path = f"{args.out}_comparison.tsv"
        if os.path.exists(path) and not args.force:
            print(f"io error: refusing to overwrite {path}", file=sys.stderr)
            return EXIT_IO
        with open(path, "w") as fh:
            fh.write(text)
        print(text, end="")
        return EXIT_OK

    if args.command == "report":
        report = run_scenario(scenario)
        for fmt in ("text", "csv", "pgm"):
            export(report, fmt, args.out, args.force)
        print(render_report(report), end="")
        return EXIT_OK

    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
