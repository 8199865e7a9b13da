"""Command line wrapper: make_figures CSV_DIR OUT_DIR [--format png|pdf]."""

import argparse
import logging
import sys

from .figures import MalformedCsvError, make_figures


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="make_figures",
        description="Render figures from simulation result CSVs.")
    parser.add_argument("csv_dir", help="directory holding the result CSVs")
    parser.add_argument("out_dir", help="directory the figures are written to")
    parser.add_argument("--format", choices=("png", "pdf"), default="png",
                        help="image format (default png)")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, format="%(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        written = make_figures(args.csv_dir, args.out_dir, fmt=args.format)
    except (MalformedCsvError, FileNotFoundError, OSError) as exc:
        print(f"make_figures: error: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(f"wrote {path}")
    print(f"{len(written)} figure(s) written")
    return 0


if __name__ == "__main__":
    sys.exit(main())
