"""Command-line front end: run scenarios, check properties, list built-ins.

Exit codes: 0 on success, 1 when a document fails to parse or validate
(including an incompatible checker), 2 when integration itself fails or
a requested check does not pass.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from .errors import IncompatibleChecker, ParseError, TransportError, ValidationError
from .report import CHECKERS, check, emit, run
from .scenarios import (
    Scenario,
    builtin_names,
    builtin_text,
    load_builtin,
    load_scenario_file,
)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_FAILED = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phasetransport",
        description="Integrate particle worldlines from scenario config files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    runp = sub.add_parser("run", help="integrate scenarios and emit trajectories")
    runp.add_argument("scenario", nargs="+", help="config file path or built-in name")
    runp.add_argument("--out", help="output file (or directory for several scenarios)")
    runp.add_argument("--format", choices=("csv", "json"), default="csv")
    runp.add_argument("--step", type=float, help="override the integrator step")
    runp.add_argument("--tau-max", type=float, help="override the proper-time horizon")
    runp.add_argument("--jobs", type=int, default=1, help="run scenarios in parallel")

    checkp = sub.add_parser("check", help="evaluate a structural property")
    checkp.add_argument("scenario", help="config file path or built-in name")
    checkp.add_argument("--checker", required=True, choices=CHECKERS)
    checkp.add_argument("--out", help="write the full JSON check report here")
    checkp.add_argument("--step", type=float, help="override the integrator step")
    checkp.add_argument("--tau-max", type=float, help="override the proper-time horizon")

    sub.add_parser("list-scenarios", help="list bundled scenario names")
    return parser


def _load(token: str, step=None, tau_max=None) -> Scenario:
    if os.path.exists(token):
        scenario = load_scenario_file(token)
    elif token in builtin_names():
        scenario = load_builtin(token)
    else:
        raise ValidationError(
            f"{token!r} is neither a file nor a built-in scenario "
            f"(built-ins: {', '.join(builtin_names())})"
        )
    overrides = {}
    if step is not None:
        overrides["step"] = step
    if tau_max is not None:
        overrides["tau_max"] = tau_max
    if overrides:
        try:
            config = dataclasses.replace(scenario.config, **overrides)
        except ValueError as err:
            raise ValidationError(str(err)) from None
        parameters = dict(scenario.parameters)
        parameters["integrator"] = {**parameters["integrator"], **overrides}
        scenario = dataclasses.replace(scenario, config=config, parameters=parameters)
    return scenario


def _run_one(token: str, args) -> tuple[str, str]:
    """Returns (scenario name, serialized report)."""
    scenario = _load(token, args.step, args.tau_max)
    report = run(scenario)
    return scenario.name, emit(report, args.format)


def _cmd_run(args) -> int:
    many = len(args.scenario) > 1
    if many and not args.out:
        print("error: several scenarios need --out pointing at a directory", file=sys.stderr)
        return EXIT_INVALID

    if args.jobs > 1 and many:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(lambda t: _run_one(t, args), args.scenario))
    else:
        results = [_run_one(t, args) for t in args.scenario]

    if not args.out:
        sys.stdout.write(results[0][1])
        return EXIT_OK
    if many:
        os.makedirs(args.out, exist_ok=True)
        for name, text in results:
            path = os.path.join(args.out, f"{name}.{args.format}")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
            print(path)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(results[0][1])
    return EXIT_OK


def _cmd_check(args) -> int:
    scenario = _load(args.scenario, args.step, args.tau_max)
    report = check(scenario, args.checker)
    verdict = "PASS" if report.summary["passed"] else "FAIL"
    print(f"{args.checker} on {scenario.name}: {verdict}")
    for key, value in report.summary.items():
        if key in ("checker", "passed"):
            continue
        print(f"  {key} = {value}")
    if args.out:
        emit(
            dataclasses.replace(report, samples=None),
            "json",
            args.out,
        )
    return EXIT_OK if report.summary["passed"] else EXIT_FAILED


def _cmd_list() -> int:
    for name in builtin_names():
        first = builtin_text(name).splitlines()[0].lstrip("# ").strip()
        print(f"{name:26s} {first}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "check":
            return _cmd_check(args)
        return _cmd_list()
    except (ParseError, ValidationError, IncompatibleChecker, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID
    except TransportError as err:
        print(f"integration error: {err}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
