"""Command-line figure renderer.

Usage::

    plot <figure-spec.json>        # one spec object, or a JSON list of them
    plot --all <run-dir>           # all four figure kinds from one run

Exit codes: 0 on success, 1 on bad arguments, unreadable inputs, or a
schema mismatch.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .figures import DEFAULT_SMOOTHING, FIGURE_KINDS, FigureSpec, render, spec_from_file
from .reader import EmptyInputError, SchemaError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plot",
        description="Render figures from simulator run directories.",
    )
    parser.add_argument(
        "target",
        help="a figure-spec JSON file, or (with --all) a run directory",
    )
    parser.add_argument(
        "--all",
        action="store_true",
        help="treat TARGET as a run directory and render every figure kind "
        "into TARGET/figures/",
    )
    parser.add_argument(
        "--png",
        action="store_true",
        help="with --all, write PNG instead of the default SVG",
    )
    parser.add_argument(
        "--smoothing",
        type=int,
        default=DEFAULT_SMOOTHING,
        help="with --all, rolling-mean window in rounds (default %(default)s)",
    )
    return parser


def _specs_for_all(run_dir: Path, png: bool, smoothing: int) -> list[FigureSpec]:
    ext = ".png" if png else ".svg"
    out_dir = run_dir / "figures"
    return [
        FigureSpec(
            kind=kind,
            inputs=(run_dir,),
            output=out_dir / f"{kind}{ext}",
            smoothing=smoothing,
        )
        for kind in FIGURE_KINDS
    ]


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.all:
            run_dir = Path(args.target)
            if not run_dir.is_dir():
                raise FileNotFoundError(f"{run_dir}: not a directory")
            specs = _specs_for_all(run_dir, args.png, args.smoothing)
        else:
            specs = spec_from_file(args.target)
        for spec in specs:
            meta = render(spec)
            print(f"wrote {meta['output']}")
    except (OSError, ValueError, SchemaError, EmptyInputError) as exc:
        print(f"plot error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
