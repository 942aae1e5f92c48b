"""``gridfreq-render``: grouped boxplot figures from benchmark CSVs."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import GROUP_COLUMN, FigureSpec, render_grouped_boxplot


def _parse_zoom(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"zoom {text!r} must look like LO,HI")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"zoom {text!r}: {exc}") from exc
    return lo, hi


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridfreq-render",
        description="Render three-panel grouped boxplots of fundamental-frequency "
        "estimation errors (full view with outliers plus two zoomed views).",
    )
    parser.add_argument("--records", type=Path, required=True, help="records CSV")
    parser.add_argument("--group-by", required=True, choices=sorted(GROUP_COLUMN))
    parser.add_argument("--out", type=Path, required=True,
                        help="output image (vector format by extension, e.g. .svg/.pdf)")
    parser.add_argument("--zoom", type=_parse_zoom, nargs=2, metavar="LO,HI",
                        default=None,
                        help="y-limits for the two zoomed panels "
                        "(default: 99th and 90th error percentiles)")
    parser.add_argument("--raster", action="store_true",
                        help="write a raster PNG instead of vector output")
    parser.add_argument("--dpi", type=int, default=200, help="raster resolution")
    parser.add_argument("--check-summary", type=Path, default=None,
                        help="harness summary CSV to verify the drawn statistics against")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec(
            records_path=args.records,
            group_var=args.group_by,
            output_path=args.out,
            zoom_limits=tuple(args.zoom) if args.zoom else None,
            raster=args.raster,
            dpi=args.dpi,
        )
        out = render_grouped_boxplot(spec, summary_path=args.check_summary)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
