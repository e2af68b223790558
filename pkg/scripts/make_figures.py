#!/usr/bin/env python3
"""Render the standard figures from an artifact root produced by
scripts/run_all_experiments.py.

Requires the companion `sclnoise-plots` package (see plots/).

Example:
    python3 scripts/make_figures.py --artifacts out --out figures
"""

import argparse
import os
import subprocess
import sys

FIGURES = [
    # (kind, relative CSV path, output name, extra flags)
    ("snapshot", "nonuniqueness_demo/snapshot.csv", "nonuniqueness.svg",
     ["--time", "2.0"]),
    ("decay_curve", "gap_decay/gap_decay.csv", "gap_decay.svg", ["--logy"]),
    ("selection", "selection_study/selection.csv", "selection.svg", []),
    ("crossval", "dual_pde_check/fk_crossval.csv", "crossval.svg", []),
]


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--artifacts", default="out", help="experiment artifact root")
    p.add_argument("--out", default="figures", help="figure output directory")
    args = p.parse_args()

    os.makedirs(args.out, exist_ok=True)
    worst = 0
    for kind, rel, name, flags in FIGURES:
        src = os.path.join(args.artifacts, rel)
        if not os.path.exists(src):
            print(f"skip {rel}: not found (run the experiment first)")
            continue
        cmd = ["sclnoise-plot", "--kind", kind, "--in", src,
               "--out", os.path.join(args.out, name), *flags]
        rc = subprocess.call(cmd)
        worst = max(worst, rc)
    return worst


if __name__ == "__main__":
    sys.exit(main())
