#!/usr/bin/env python3
"""Run every registered experiment into one artifact root.

Example:
    python3 scripts/run_all_experiments.py --out-root out --smoke
"""

import argparse
import sys

from sclnoise.cli import main as run_one
from sclnoise.experiments import EXPERIMENTS


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out-root", default="out", help="artifact root directory")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--smoke", action="store_true", help="tiny fast profiles")
    p.add_argument("--seed", type=int, default=None)
    args = p.parse_args()

    worst = 0
    for name in sorted(EXPERIMENTS):
        argv = [name, "--out", f"{args.out_root}/{name}",
                "--threads", str(args.threads)]
        if args.smoke:
            argv.append("--smoke")
        if args.seed is not None:
            argv += ["--seed", str(args.seed)]
        print(f"=== {name} ===")
        rc = run_one(argv)
        worst = max(worst, rc)
    return worst


if __name__ == "__main__":
    sys.exit(main())
