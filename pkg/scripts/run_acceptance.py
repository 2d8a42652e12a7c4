"""Run the acceptance criteria and print one line per check.

Usage: python scripts/run_acceptance.py [all|1..7] [--csv PATH]
"""

import argparse
import sys

from cbshell.acceptance import run_acceptance


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("suite", nargs="?", default="all")
    p.add_argument("--csv", help="also write the report here")
    args = p.parse_args(argv)
    report = run_acceptance(args.suite)
    print(report.text())
    if args.csv:
        report.write_csv(args.csv)
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
