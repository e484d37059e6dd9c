"""Batch entry point: trajfig --spec FILE [--spec FILE ...]."""

import argparse
import sys

from .render import PlotSpec, SchemaError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="trajfig", description="render plots from trajectory CSV files"
    )
    parser.add_argument(
        "--spec", action="append", required=True, help="plot spec JSON (repeatable)"
    )
    args = parser.parse_args(argv)
    for spec_path in args.spec:
        try:
            spec = PlotSpec.from_file(spec_path)
            written = render(spec)
        except SchemaError as exc:
            print(f"error: {spec_path}: {exc}", file=sys.stderr)
            return 2
        for path in written:
            print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
