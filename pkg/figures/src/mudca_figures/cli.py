"""figures <kind> --in DIR --out FILE [--title TEXT]

Exit codes: 0 on success, 1 for bad specs or schema-mismatched inputs
(message names the offending column/file), 2 for unexpected failures.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .render import FIGURE_KINDS, FigureError, FigureSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figures",
        description="Render figures from simulator CSV/summary outputs")
    parser.add_argument("kind", choices=FIGURE_KINDS)
    parser.add_argument("--in", dest="input_dir", required=True,
                        help="input directory (or single input file)")
    parser.add_argument("--out", dest="output_path", required=True,
                        help="output image path")
    parser.add_argument("--title", default=None)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec(kind=args.kind, input_dir=args.input_dir,
                          output_path=args.output_path, title=args.title)
        path = render(spec)
    except FigureError as exc:
        print(f"figure error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {path}")
    return 0


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
