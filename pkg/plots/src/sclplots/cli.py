"""Command-line figure generator for sclnoise CSV artifacts."""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, FigureSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="sclnoise-plot",
        description="Render one figure from one sclnoise CSV artifact.",
    )
    p.add_argument("--kind", required=True, choices=KINDS,
                   help="figure kind (fixes the expected CSV schema)")
    p.add_argument("--in", dest="csv_path", required=True,
                   help="input CSV written by the sclnoise tool")
    p.add_argument("--out", dest="out_path", required=True,
                   help="output SVG path")
    p.add_argument("--time", type=float, default=None,
                   help="snapshot only: time used for the support-edge overlays")
    p.add_argument("--logy", action="store_true",
                   help="log scale on the y axis (decay curves)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(kind=args.kind, csv_path=args.csv_path,
                      out_path=args.out_path, time=args.time, logy=args.logy)
    try:
        path = render(spec)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
