"""Renderer tests against harness-produced fixture CSVs."""

from pathlib import Path

import numpy as np
import pytest

from gridfreq_figures import (
    FigureSpec,
    box_statistics,
    compute_boxes,
    default_zoom_limits,
    load_records,
    render_grouped_boxplot,
    verify_against_summary,
)
from gridfreq_figures.cli import main
from gridfreq_figures.render import GROUP_COLUMN, METHOD_ORDER, build_figure

DATA = Path(__file__).parent / "data"
RECORDS_CSV = DATA / "records.csv"

GROUP_VALUE_COUNTS = {"fm": 2, "delta_f0": 2, "f0": 2, "mc": 1, "snr": 2}


class TestBoxStatistics:
    def test_matches_independent_computation(self):
        rng = np.random.default_rng(1)
        values = rng.lognormal(sigma=2.0, size=101)
        stats = box_statistics(values)

        q1, med, q3 = np.percentile(values, [25, 50, 75])
        assert stats["q1"] == q1 and stats["median"] == med and stats["q3"] == q3
        iqr = q3 - q1
        inside = values[(values >= q1 - 1.5 * iqr) & (values <= q3 + 1.5 * iqr)]
        assert stats["whisker_low"] == np.min(inside)
        assert stats["whisker_high"] == np.max(inside)
        n_out = np.sum(values < q1 - 1.5 * iqr) + np.sum(values > q3 + 1.5 * iqr)
        assert len(stats["outliers"]) == n_out

    def test_textbook_outlier(self):
        stats = box_statistics([1.0, 2.0, 3.0, 4.0, 100.0])
        assert stats["outliers"] == (100.0,)
        assert stats["whisker_high"] == 4.0


class TestFixtureFidelity:
    """Drawn statistics must equal the harness summary within 1e-9."""

    @pytest.mark.parametrize("group_var", sorted(GROUP_COLUMN))
    def test_matches_harness_summary(self, group_var):
        records = load_records(RECORDS_CSV)
        _, cells = compute_boxes(records, group_var)
        verify_against_summary(cells, group_var, DATA / f"summary_{group_var}.csv",
                               tol=1e-9)

    def test_mismatch_is_detected(self, tmp_path):
        records = load_records(RECORDS_CSV)
        _, cells = compute_boxes(records, "fm")
        doctored = (DATA / "summary_fm.csv").read_text().splitlines()
        cells[0].median += 1e-6
        (tmp_path / "summary.csv").write_text("\n".join(doctored) + "\n")
        with pytest.raises(ValueError, match="median mismatch"):
            verify_against_summary(cells, "fm", tmp_path / "summary.csv", tol=1e-9)

    def test_wrong_group_var_rejected(self):
        records = load_records(RECORDS_CSV)
        _, cells = compute_boxes(records, "fm")
        with pytest.raises(ValueError, match="grouped by"):
            verify_against_summary(cells, "fm", DATA / "summary_snr.csv")


class TestRendering:
    @pytest.mark.parametrize("group_var", sorted(GROUP_COLUMN))
    def test_three_panel_figure_per_group_variable(self, tmp_path, group_var):
        out = tmp_path / f"{group_var}.svg"
        spec = FigureSpec(records_path=RECORDS_CSV, group_var=group_var,
                          output_path=out)
        render_grouped_boxplot(spec, summary_path=DATA / f"summary_{group_var}.csv")
        assert out.exists()
        assert b"<svg" in out.read_bytes()[:300]

    def test_panel_layout_and_boxes(self):
        records = load_records(RECORDS_CSV)
        values, cells = compute_boxes(records, "fm")
        assert len(values) == GROUP_VALUE_COUNTS["fm"]
        assert len(cells) == len(values) * len(METHOD_ORDER)

        fig = build_figure(values, cells, "fm", default_zoom_limits(records))
        try:
            assert len(fig.axes) == 3
            top, mid, bot = fig.axes
            # one box per (group value, method) on every panel
            for ax in fig.axes:
                boxes = [p for p in ax.patches if type(p).__name__ == "PathPatch"]
                assert len(boxes) == len(cells)
            # zoomed panels hide fliers and nest their y-extents
            assert len(top.lines) > len(mid.lines) or any(
                line.get_marker() == "." for line in top.lines
            )
            assert mid.get_ylim()[1] >= bot.get_ylim()[1]
        finally:
            import matplotlib.pyplot as plt

            plt.close(fig)

    def test_explicit_zoom_applied(self, tmp_path):
        out = tmp_path / "zoomed.svg"
        spec = FigureSpec(records_path=RECORDS_CSV, group_var="fm", output_path=out,
                          zoom_limits=((0.0, 1e-2), (0.0, 1e-3)))
        records = load_records(RECORDS_CSV)
        values, cells = compute_boxes(records, "fm")
        fig = build_figure(values, cells, "fm", spec.zoom_limits)
        try:
            assert fig.axes[1].get_ylim()[1] == pytest.approx(1e-2)
            assert fig.axes[2].get_ylim()[1] == pytest.approx(1e-3)
        finally:
            import matplotlib.pyplot as plt

            plt.close(fig)

    def test_raster_flag(self, tmp_path):
        out = tmp_path / "fig.png"
        spec = FigureSpec(records_path=RECORDS_CSV, group_var="mc", output_path=out,
                          raster=True, dpi=72)
        render_grouped_boxplot(spec)
        assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


class TestValidation:
    def test_unknown_group_variable(self, tmp_path):
        with pytest.raises(ValueError, match="unknown group variable"):
            FigureSpec(records_path=RECORDS_CSV, group_var="phase",
                       output_path=tmp_path / "x.svg")

    def test_bad_zoom_bounds(self, tmp_path):
        with pytest.raises(ValueError, match="zoom"):
            FigureSpec(records_path=RECORDS_CSV, group_var="fm",
                       output_path=tmp_path / "x.svg",
                       zoom_limits=((0.0, 1e-3), (0.0, 1e-2)))
        with pytest.raises(ValueError, match="zoom"):
            FigureSpec(records_path=RECORDS_CSV, group_var="fm",
                       output_path=tmp_path / "x.svg",
                       zoom_limits=((1e-2, 1e-3), (1e-4, 1e-3)))

    def test_empty_csv_errors_without_writing(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text(",".join(
            ["method", "f0_hz", "delta_f0_hz", "fm_hz", "mc", "snr_db",
             "window_start_s", "window_len_s", "f0_hat_hz", "f0_ref_hz",
             "rel_err", "failed"]) + "\n")
        out = tmp_path / "fig.svg"
        spec = FigureSpec(records_path=empty, group_var="fm", output_path=out)
        with pytest.raises(ValueError, match="no data rows"):
            render_grouped_boxplot(spec)
        assert not out.exists()

    def test_missing_columns(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("method,rel_err\niec,0.5\n")
        with pytest.raises(ValueError, match="missing columns"):
            load_records(bad)


class TestCli:
    def test_successful_run(self, tmp_path, capsys):
        out = tmp_path / "fig.svg"
        code = main(["--records", str(RECORDS_CSV), "--group-by", "fm",
                     "--out", str(out),
                     "--check-summary", str(DATA / "summary_fm.csv")])
        assert code == 0
        assert out.exists()

    def test_zoom_arguments(self, tmp_path):
        out = tmp_path / "fig.svg"
        code = main(["--records", str(RECORDS_CSV), "--group-by", "delta_f0",
                     "--out", str(out), "--zoom", "0,0.01", "0,0.001"])
        assert code == 0

    def test_error_exit_code(self, tmp_path, capsys):
        code = main(["--records", str(tmp_path / "missing.csv"),
                     "--group-by", "fm", "--out", str(tmp_path / "fig.svg")])
        assert code == 1
        assert "error:" in capsys.readouterr().err
