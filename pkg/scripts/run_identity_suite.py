#!/usr/bin/env python3
"""Run the full identity and special-case verification and print a report.

Usage: python scripts/run_identity_suite.py [--trials N] [--seed S]
"""

import argparse
import sys

from divnet.identities import run_identity_suite, special_case_suite

GENERATORS = ["quadratic", "negative_entropy", "negative_log"]


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--trials", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    failed = False
    print(f"identity suite: {args.trials} trials per (identity, generator), "
          f"seed {args.seed}")
    for r in run_identity_suite(GENERATORS, trials=args.trials, seed=args.seed):
        status = "SKIP" if r.skipped else ("pass" if r.passed else "FAIL")
        print(f"  {r.identity:3} {r.generator:17} max_residual "
              f"{r.max_residual:.3e}  {status}")
        failed |= not r.passed

    print("special cases:")
    for r in special_case_suite(seed=args.seed, trials=max(1, args.trials // 2)):
        print(f"  {r.identity:12} {r.generator:17} max_residual "
              f"{r.max_residual:.3e}  {'pass' if r.passed else 'FAIL'}")
        failed |= not r.passed
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
