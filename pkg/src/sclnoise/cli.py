"""Command-line entry point: run one registered experiment per invocation."""

from __future__ import annotations

import argparse
import os
import sys

from .errors import SclnoiseError
from .io import ExperimentConfig, default_out_root


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="sclnoise",
        description="Run a registered conservation-law experiment and emit "
                    "CSV artifacts plus pass/fail certificates.",
    )
    p.add_argument("experiment", help="experiment name from the registry")
    p.add_argument("--config", help="INI config file (overrides defaults)")
    p.add_argument("--out", help="output directory (default: <root>/<experiment>)")
    p.add_argument("--seed", type=int, help="override the base seed")
    p.add_argument("--threads", type=int, default=1, help="worker threads")
    p.add_argument("--smoke", action="store_true", help="tiny fast profile")
    return p


def main(argv=None) -> int:
    from dataclasses import replace

    from .experiments import EXPERIMENTS, default_config, run_experiment

    args = build_parser().parse_args(argv)
    if args.experiment not in EXPERIMENTS:
        print(f"unknown experiment {args.experiment!r}; choose one of: "
              + ", ".join(sorted(EXPERIMENTS)), file=sys.stderr)
        return 2

    if args.config:
        cfg = ExperimentConfig.load(args.config)
        if cfg.experiment != args.experiment:
            cfg = replace(cfg, experiment=args.experiment)
    else:
        cfg = default_config(args.experiment)
    if args.seed is not None:
        cfg = replace(cfg, base_seed=args.seed)

    out_dir = args.out or os.path.join(default_out_root(), args.experiment)
    try:
        ok = run_experiment(cfg, out_dir, threads=args.threads, smoke=args.smoke)
    except SclnoiseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2
    print(f"artifacts written to {out_dir}")
    with open(os.path.join(out_dir, "summary.txt")) as fh:
        sys.stdout.write(fh.read())
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
