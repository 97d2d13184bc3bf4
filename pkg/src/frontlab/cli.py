"""Command-line entry point.

Every subcommand takes --config and --out and writes its artifacts into the
output directory.  The exit status is 0 only when everything the subcommand
was asked to certify passed; rejected scenarios and failed certificates exit
with 1 after writing their diagnosis.
"""

from __future__ import annotations

import argparse
import sys

from .pipeline import (STAGES, SWEEP_PARAMETERS, run_pipeline, sweep,
                       verify_from_dir)

STAGE_COMMANDS = ("validate", "spectrum", "eigenfunction", "profile",
                  "simulate")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="frontlab",
        description="Build and certify transition fronts for u_t = u_xx + f(x, u).")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, config_help="scenario file (INI)"):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help=config_help)
        p.add_argument("--out", required=True, help="output directory")
        return p

    for name, text in (
            ("validate", "check the reaction data against its envelopes"),
            ("spectrum", "rate selection: lambda0, threshold, chosen lambda"),
            ("eigenfunction", "solve phi'' + a phi = lambda phi and certify it"),
            ("profile", "build the wave profiles and their transforms"),
            ("simulate", "run the comparison scheme between the envelopes")):
        add(name, text)

    p = add("pipeline", "everything: validate through verify, with plots")
    p.add_argument("--no-plots", action="store_true",
                   help="skip the SVG figures")

    add("verify", "re-certify a finished run from its directory",
        config_help="run directory holding config.ini and snapshots.csv")

    p = add("sweep", "run one pipeline per parameter value, concurrently")
    p.add_argument("--parameter", required=True, choices=SWEEP_PARAMETERS)
    p.add_argument("--values", required=True,
                   help="comma-separated numeric values")
    p.add_argument("--jobs", type=int, default=None,
                   help="worker processes (default: min(n values, 4))")
    return parser


def _print_stages(summary):
    for rec in summary["stages"]:
        flag = "pass" if rec["passed"] else "FAIL"
        note = f"  ({rec['note']})" if rec.get("note") else ""
        print(f"  {rec['name']:<14} {flag}{note}")


def _finish_artifact(art) -> int:
    print(f"run directory: {art.directory}")
    print(f"config hash:   {art.config_hash}")
    _print_stages(art.summary)
    if art.error is not None:
        print(f"rejected at stage {art.error['stage']}: {art.error['message']}")
        return 1
    if art.report is not None:
        print(art.report)
    return 0 if art.summary["all_passed"] else 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "verify":
        report = verify_from_dir(args.config, args.out)
        print(report)
        return 0 if report.all_passed else 1

    if args.command == "sweep":
        values = [float(v) for v in args.values.split(",") if v.strip()]
        rows = sweep(args.config, args.parameter, values, args.out,
                     jobs=args.jobs)
        print(f"{'value':>12} {'speed':>10} {'max_width':>10} "
              f"{'sandwich':>11} pass")
        for row in rows:
            print(f"{row['value']:>12.6g} {row['speed']:>10.4g} "
                  f"{row['max_width']:>10.4g} {row['worst_sandwich']:>11.3e} "
                  f"{str(row['passed']).lower():<5} {row['note']}")
        print(f"sweep table: {args.out}/sweep.csv")
        return 0 if all(r["passed"] for r in rows) else 1

    if args.command in STAGE_COMMANDS:
        art = run_pipeline(args.config, args.out, stop_after=args.command,
                           make_plots=False)
        return _finish_artifact(art)

    if args.command == "pipeline":
        art = run_pipeline(args.config, args.out,
                           make_plots=False if args.no_plots else None)
        return _finish_artifact(art)

    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
