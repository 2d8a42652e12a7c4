"""Run every shipped scenario under each technique and collect the outputs.

Usage: python scripts/run_experiments.py [--out DIR] [--experiments 1 2 ...]
"""

import argparse
import sys
from pathlib import Path

from cbshell.cli import main as cli_main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="results")
    p.add_argument("--experiments", type=int, nargs="+", default=[1, 2, 3, 4, 5])
    p.add_argument("--techniques", type=int, nargs="+", default=[1, 2, 3])
    args = p.parse_args(argv)
    status = 0
    for exp in args.experiments:
        cfg = CONFIGS / f"experiment{exp}.cfg"
        for tech in args.techniques:
            out = Path(args.out) / f"experiment{exp}" / f"technique{tech}"
            status |= cli_main(["run", str(cfg), "--out", str(out), "--technique", str(tech)])
    return status


if __name__ == "__main__":
    sys.exit(main())
