"""render_figures: turn simulator CSV bundles into figure images."""

from __future__ import annotations

import argparse
import sys

from .reader import BundleError
from .render import FIGURE_IDS, render_bundle


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="render_figures",
        description="Render the interference figures from a directory of "
                    "uplinksim CSV bundles (fig1/ ... fig4/ as written by "
                    "`uplinksim figures`).")
    parser.add_argument("bundle_dir",
                        help="directory containing the figN subdirectories")
    parser.add_argument("--which", default="all",
                        choices=["all", "1", "2", "3", "4"])
    parser.add_argument("--format", default="png", choices=["png", "svg"],
                        dest="image_format")
    parser.add_argument("--out", default=None,
                        help="output directory (default: the bundle dir)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    which = FIGURE_IDS if args.which == "all" else (int(args.which),)
    out_dir = args.out if args.out is not None else args.bundle_dir
    try:
        rendered = render_bundle(args.bundle_dir, which, out_dir,
                                 args.image_format)
    except BundleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for figure_id in rendered:
        print(f"rendered fig{figure_id}.{args.image_format} "
              f"({len(rendered[figure_id])} series)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
