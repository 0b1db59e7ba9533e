"""Batch figure rendering from experiment CSV outputs.

Usage:
    miscplots render --kind envelope --in envelope_1.csv plateau_1.csv --out env1.png

Exit codes: 0 success, 2 schema mismatch or bad arguments (the message
names the offending file and columns).
"""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_KINDS, FigureSpec, SchemaError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="miscplots", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure from CSV inputs")
    p.add_argument("--kind", required=True, choices=FIGURE_KINDS)
    p.add_argument("--in", dest="inputs", nargs="+", required=True, metavar="CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--label", dest="labels", nargs="*", default=[])
    args = parser.parse_args(argv)
    try:
        spec = FigureSpec(kind=args.kind, inputs=args.inputs, output=args.out, labels=args.labels)
        render(spec)
    except (SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
