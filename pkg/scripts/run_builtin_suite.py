#!/usr/bin/env python3
"""Run every built-in scenario and tabulate oracle errors.

Usage:
    python3 scripts/run_builtin_suite.py [--checkers] [--out DIR]

With --checkers, also runs each property checker that is compatible with
the scenario (slower; the dual-route comparisons re-integrate everything).
With --out, the full JSON report of every run is written to DIR.
"""

import argparse
import pathlib
import sys
import time

from phasetransport.errors import IncompatibleChecker
from phasetransport.report import CHECKERS, check, emit, run
from phasetransport.scenarios import BUILTIN_NAMES, load_builtin


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--checkers", action="store_true",
                    help="also run every compatible property checker")
    ap.add_argument("--out", type=pathlib.Path,
                    help="directory for per-scenario JSON reports")
    args = ap.parse_args()

    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)

    print(f"{'scenario':28s} {'samples':>8s} {'tau':>10s} "
          f"{'max |g u.u + 1|':>16s}  oracle errors")
    for name in BUILTIN_NAMES:
        t0 = time.perf_counter()
        rep = run(load_builtin(name))
        dt = time.perf_counter() - t0
        s = rep.summary
        oracle_bits = ", ".join(
            f"{k.removeprefix('oracle_')}={v:.2e}"
            for k, v in sorted(s.items())
            if k.startswith("oracle_") or k in ("precession_exact_error",)
        ) or "-"
        print(f"{name:28s} {s['n_samples']:8d} {s['tau_final']:10.2f} "
              f"{s['max_norm_residual']:16.3e}  {oracle_bits}  [{dt:.2f}s]")
        if args.out:
            emit(rep, "json", args.out / f"{name}.json")

    if not args.checkers:
        return 0

    print()
    print(f"{'scenario':28s} {'checker':22s} verdict")
    failures = 0
    for name in BUILTIN_NAMES:
        for checker in CHECKERS:
            try:
                rep = check(load_builtin(name), checker)
            except IncompatibleChecker:
                continue
            verdict = "PASS" if rep.summary["passed"] else "FAIL"
            failures += rep.status != "passed"
            print(f"{name:28s} {checker:22s} {verdict}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
