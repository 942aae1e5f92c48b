"""Grouped boxplot figures from benchmark records CSVs.

Reads the error-records CSV emitted by the benchmark harness and draws a
three-panel figure for one grouping variable: the top panel shows the
error dispersion with outlier markers, the two lower panels hide the
outliers and apply progressively tighter y-axis zooms.  Within each group
value there is one box per method, in the fixed order IEC, xcorr,
Hilbert, Esprit.

Box statistics are recomputed here with the same conventions the harness
uses (quartiles by linear interpolation between order statistics,
whiskers at the most extreme data within 1.5 IQR) so the drawn boxes can
be checked against a harness summary CSV with ``verify_against_summary``.
This package talks to the benchmark only through its CSV files.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

RECORD_COLUMNS = (
    "method",
    "f0_hz",
    "delta_f0_hz",
    "fm_hz",
    "mc",
    "snr_db",
    "window_start_s",
    "window_len_s",
    "f0_hat_hz",
    "f0_ref_hz",
    "rel_err",
    "failed",
)

SUMMARY_COLUMNS = (
    "method",
    "group_var",
    "group_value",
    "n",
    "n_failed",
    "median",
    "q1",
    "q3",
    "whisker_low",
    "whisker_high",
    "n_outliers",
)

GROUP_COLUMN = {
    "fm": "fm_hz",
    "delta_f0": "delta_f0_hz",
    "f0": "f0_hz",
    "mc": "mc",
    "snr": "snr_db",
}

# maps the CLI group names onto the harness summary group_var spellings
SUMMARY_GROUP_VAR = {
    "fm": "f_m",
    "delta_f0": "delta_f0",
    "f0": "f0",
    "mc": "m_c",
    "snr": "snr",
}

METHOD_ORDER = ("iec", "xcorr", "hilbert", "esprit")
METHOD_LABEL = {"iec": "IEC", "xcorr": "xcorr", "hilbert": "Hilbert", "esprit": "Esprit"}
METHOD_COLOR = {
    "iec": "tab:blue",
    "xcorr": "tab:orange",
    "hilbert": "tab:green",
    "esprit": "tab:red",
}

GROUP_AXIS_LABEL = {
    "fm": "modulating frequency $f_m$ (Hz)",
    "delta_f0": "frequency deviation $\\Delta f_0$ (Hz)",
    "f0": "carrier frequency $f_0$ (Hz)",
    "mc": "clip level $m_c$",
    "snr": "SNR (dB)",
}


@dataclass(frozen=True)
class FigureSpec:
    """One figure request: which records, which grouping, where to write."""

    records_path: Path
    group_var: str
    output_path: Path
    zoom_limits: tuple[tuple[float, float], tuple[float, float]] | None = None
    raster: bool = False
    dpi: int = 200

    def __post_init__(self) -> None:
        if self.group_var not in GROUP_COLUMN:
            raise ValueError(
                f"unknown group variable {self.group_var!r}; "
                f"expected one of {sorted(GROUP_COLUMN)}"
            )
        if self.zoom_limits is not None:
            (lo1, hi1), (lo2, hi2) = self.zoom_limits
            for lo, hi in ((lo1, hi1), (lo2, hi2)):
                if not (0 <= lo < hi):
                    raise ValueError(f"zoom bounds must satisfy 0 <= low < high, got {(lo, hi)}")
            if not (lo1 <= lo2 and hi2 <= hi1):
                raise ValueError(
                    f"second zoom {(lo2, hi2)} must nest inside the first {(lo1, hi1)}"
                )


@dataclass
class BoxCell:
    """Statistics behind one drawn box."""

    method: str
    group_value: float | None
    n: int
    n_failed: int
    median: float = float("nan")
    q1: float = float("nan")
    q3: float = float("nan")
    whisker_low: float = float("nan")
    whisker_high: float = float("nan")
    outliers: tuple[float, ...] = ()


def load_records(path) -> list[dict]:
    """Rows of a records CSV with numeric fields parsed.

    Raises on missing columns or a CSV with no data rows.
    """
    path = Path(path)
    with path.open("r", newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(RECORD_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: records CSV missing columns {sorted(missing)}")
        rows = []
        for raw in reader:
            rows.append(
                {
                    "method": raw["method"],
                    "fm_hz": float(raw["fm_hz"]),
                    "delta_f0_hz": float(raw["delta_f0_hz"]),
                    "f0_hz": float(raw["f0_hz"]),
                    "mc": float(raw["mc"]),
                    "snr_db": None if raw["snr_db"] == "none" else float(raw["snr_db"]),
                    "rel_err": float(raw["rel_err"]),
                    "failed": raw["failed"] == "true",
                }
            )
    if not rows:
        raise ValueError(f"{path}: records CSV has no data rows")
    return rows


def box_statistics(values) -> dict:
    """Median, quartiles, Tukey whiskers and outliers of one sample."""
    values = np.asarray(values, dtype=float)
    q1, median, q3 = np.percentile(values, [25.0, 50.0, 75.0])
    iqr = q3 - q1
    lo_lim, hi_lim = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = values[(values >= lo_lim) & (values <= hi_lim)]
    return {
        "median": float(median),
        "q1": float(q1),
        "q3": float(q3),
        "whisker_low": float(np.min(inside)) if inside.size else float(q1),
        "whisker_high": float(np.max(inside)) if inside.size else float(q3),
        "outliers": tuple(np.sort(values[(values < lo_lim) | (values > hi_lim)]).tolist()),
    }


def compute_boxes(records, group_var: str) -> tuple[list, list[BoxCell]]:
    """Group values in display order plus one BoxCell per (value, method)."""
    column = GROUP_COLUMN[group_var]
    values = sorted(
        {row[column] for row in records},
        key=lambda v: (v is None, v if v is not None else 0.0),
    )
    methods = [m for m in METHOD_ORDER if any(row["method"] == m for row in records)]

    cells = []
    for value in values:
        for method in methods:
            sample = [
                row["rel_err"]
                for row in records
                if row[column] == value and row["method"] == method and not row["failed"]
            ]
            n_failed = sum(
                1
                for row in records
                if row[column] == value and row["method"] == method and row["failed"]
            )
            cell = BoxCell(method=method, group_value=value, n=len(sample), n_failed=n_failed)
            if sample:
                for key, stat in box_statistics(sample).items():
                    setattr(cell, key, stat)
            cells.append(cell)
    return values, cells


def load_summary(path) -> list[dict]:
    path = Path(path)
    with path.open("r", newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(SUMMARY_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: summary CSV missing columns {sorted(missing)}")
        return list(reader)


def verify_against_summary(cells, group_var: str, summary_path, tol: float = 1e-9) -> None:
    """Check recomputed box statistics against a harness summary CSV.

    Raises ValueError on the first statistic differing by more than
    ``tol`` (relative, with an absolute floor of the same size).
    """
    rows = load_summary(summary_path)
    expected = {}
    for row in rows:
        if row["group_var"] != SUMMARY_GROUP_VAR[group_var]:
            raise ValueError(
                f"summary is grouped by {row['group_var']!r}, figure by {group_var!r}"
            )
        value = None if row["group_value"] == "none" else float(row["group_value"])
        expected[(row["method"], value)] = row

    for cell in cells:
        row = expected.get((cell.method, cell.group_value))
        if row is None:
            raise ValueError(
                f"summary has no entry for method {cell.method!r}, "
                f"group {cell.group_value!r}"
            )
        if cell.n == 0:
            continue
        checks = [
            ("median", cell.median),
            ("q1", cell.q1),
            ("q3", cell.q3),
            ("whisker_low", cell.whisker_low),
            ("whisker_high", cell.whisker_high),
        ]
        for name, got in checks:
            want = float(row[name])
            if abs(got - want) > tol * max(1.0, abs(want)):
                raise ValueError(
                    f"{name} mismatch for {cell.method}/{cell.group_value}: "
                    f"drawn {got!r} vs summary {want!r}"
                )
        if cell.n != int(row["n"]) or len(cell.outliers) != int(row["n_outliers"]):
            raise ValueError(
                f"count mismatch for {cell.method}/{cell.group_value}"
            )


def default_zoom_limits(records) -> tuple[tuple[float, float], tuple[float, float]]:
    """Data-driven zooms: the 99th and 90th percentiles of the error."""
    errors = np.array([row["rel_err"] for row in records if not row["failed"]])
    if errors.size == 0:
        raise ValueError("all records failed; nothing to plot")
    p99, p90 = np.percentile(errors, [99.0, 90.0])
    top = float(np.max(errors))
    # degenerate spreads still need a visible axis
    p99 = p99 if p99 > 0 else top if top > 0 else 1.0
    p90 = p90 if p90 > 0 else p99
    return ((0.0, float(p99)), (0.0, float(min(p90, p99))))


def build_figure(values, cells, group_var: str, zoom_limits) -> "plt.Figure":
    """Three stacked panels: full view with outliers, then two zoomed views."""
    methods = [m for m in METHOD_ORDER if any(c.method == m for c in cells)]
    n_methods = len(methods)
    slot = n_methods + 1

    fig, axes = plt.subplots(3, 1, figsize=(max(8.0, 1.2 * slot * len(values)), 11.0))
    panels = [
        {"axis": axes[0], "fliers": True, "ylim": None},
        {"axis": axes[1], "fliers": False, "ylim": zoom_limits[0]},
        {"axis": axes[2], "fliers": False, "ylim": zoom_limits[1]},
    ]
    for panel in panels:
        ax = panel["axis"]
        stats, positions, colors = [], [], []
        for i, value in enumerate(values):
            for j, method in enumerate(methods):
                cell = next(
                    c for c in cells if c.group_value == value and c.method == method
                )
                if cell.n == 0:
                    continue
                stats.append(
                    {
                        "med": cell.median,
                        "q1": cell.q1,
                        "q3": cell.q3,
                        "whislo": cell.whisker_low,
                        "whishi": cell.whisker_high,
                        "fliers": list(cell.outliers) if panel["fliers"] else [],
                        "label": "",
                    }
                )
                positions.append(i * slot + j)
                colors.append(METHOD_COLOR[method])
        artists = ax.bxp(
            stats,
            positions=positions,
            widths=0.8,
            showfliers=panel["fliers"],
            patch_artist=True,
            flierprops={"marker": ".", "markersize": 3},
        )
        for box, color in zip(artists["boxes"], colors):
            box.set_facecolor(color)
            box.set_alpha(0.6)
        ax.set_xticks([i * slot + (n_methods - 1) / 2 for i in range(len(values))])
        ax.set_xticklabels(["none" if v is None else f"{v:g}" for v in values])
        ax.set_ylabel("relative error $\\delta f_0$")
        ax.grid(True, axis="y", alpha=0.3)
        if panel["ylim"] is not None:
            ax.set_ylim(*panel["ylim"])

    axes[0].set_title("error dispersion (with outliers)")
    axes[1].set_title("without outliers, first zoom")
    axes[2].set_title("without outliers, second zoom")
    axes[2].set_xlabel(GROUP_AXIS_LABEL[group_var])

    handles = [
        plt.Rectangle((0, 0), 1, 1, facecolor=METHOD_COLOR[m], alpha=0.6,
                      label=METHOD_LABEL[m])
        for m in methods
    ]
    axes[0].legend(handles=handles, ncol=n_methods, loc="upper right", fontsize=9)
    fig.tight_layout()
    return fig


def render_grouped_boxplot(spec: FigureSpec, summary_path=None) -> Path:
    """Render one figure; returns the written path.

    Validates the records and computes every statistic before any file is
    created, so bad input never leaves a partial image behind.  When
    ``summary_path`` is given the recomputed statistics are checked against
    that harness summary first.
    """
    records = load_records(spec.records_path)
    values, cells = compute_boxes(records, spec.group_var)
    if summary_path is not None:
        verify_against_summary(cells, spec.group_var, summary_path)
    zooms = spec.zoom_limits or default_zoom_limits(records)

    fig = build_figure(values, cells, spec.group_var, zooms)
    out = Path(spec.output_path)
    try:
        if spec.raster:
            fig.savefig(out, format="png", dpi=spec.dpi)
        else:
            fig.savefig(out)
    finally:
        plt.close(fig)
    return out
