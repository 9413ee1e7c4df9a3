"""Command-line entry point.

Exit codes: 0 success, 1 scenario validation error, 2 solver failure,
3 acceptance-property violation (negative audit margins).
"""
from __future__ import annotations

import argparse
import json
import sys

from .runner import SolverFailure, run
from .scenarios import ScenarioError, parse_scenario, preset, preset_catalog

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_SOLVER = 2
EXIT_PROPERTY = 3


def _load_scenario(args):
    if args.preset:
        return preset(args.preset)
    if not args.scenario:
        raise ScenarioError(["either --scenario <path> or --preset <name> is required"])
    with open(args.scenario) as fh:
        return parse_scenario(fh.read())


def _add_common(p):
    p.add_argument("--scenario", help="path to a scenario JSON document")
    p.add_argument("--preset", help="name of a bundled scenario")


def _add_run_opts(p):
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--tol", type=float, default=None, help="override solver tolerance")
    p.add_argument("--threads", type=int, default=1, help="parallel sweep legs")
    p.add_argument("--dump-state", action="store_true",
                   help="also write the full field at every snapshot")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="aggfrag",
        description="polymer aggregation-fragmentation simulation and verification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a scenario document")
    _add_common(p)

    p = sub.add_parser("run", help="run a scenario's configured pipeline")
    _add_common(p)
    _add_run_opts(p)

    p = sub.add_parser("sweep", help="run the scenario as a scaling sweep")
    _add_common(p)
    _add_run_opts(p)

    p = sub.add_parser("audit", help="run the moment/derivative bound audit")
    _add_common(p)
    _add_run_opts(p)

    p = sub.add_parser("presets", help="list bundled scenarios")
    p.add_argument("--dump", help="print the named preset as JSON")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)

    if args.command == "presets":
        if args.dump:
            try:
                sc = preset(args.dump)
            except KeyError as exc:
                print(exc, file=sys.stderr)
                return EXIT_VALIDATION
            print(json.dumps(sc.raw, indent=1, sort_keys=True))
        else:
            for name in preset_catalog():
                print(name)
        return EXIT_OK

    try:
        scenario = _load_scenario(args)
    except ScenarioError as exc:
        print(exc, file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"cannot read scenario: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    if args.command == "validate":
        print(f"scenario {scenario.name!r} ok (pipeline: {scenario.pipeline})")
        return EXIT_OK

    if args.command in ("sweep", "audit"):
        scenario.pipeline = args.command

    try:
        manifest = run(scenario, args.out, tol=args.tol, threads=args.threads,
                       dump_state=args.dump_state)
    except SolverFailure as exc:
        print(exc, file=sys.stderr)
        return EXIT_SOLVER

    for name, rel in sorted(manifest.artifacts.items()):
        print(f"{name}: {args.out}/{rel}")
    if manifest.flags.get("audit_ok") is False:
        print("audit: negative margins detected", file=sys.stderr)
        return EXIT_PROPERTY
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
