"""Sweep harness: parameter grid, sliding windows, errors, grouped stats.

A sweep enumerates the Cartesian product of the grid lists, synthesizes
each configuration's record with a seed derived from the configuration
itself (so any subgrid reproduces the same records as the full run),
decimates once to the operating rate, runs every method on every sliding
window and emits one :class:`ErrorRecord` per (config, method, window).

Configurations are independent work units; they may be executed in a
process pool and the record stream is merged in configuration order, so
output is deterministic regardless of parallelism.
"""

from __future__ import annotations

import csv
import hashlib
import itertools
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .estimators import (
    Method,
    design_bandpass,
    decimate,
    estimate_autocorr,
    estimate_esprit,
    estimate_hilbert,
    estimate_iec,
)
from .signal_model import TestSignalSpec, Waveform, WindowSpan, reference_f0, synthesize

WORKERS_ENV_VAR = "GRIDFREQ_WORKERS"

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

GROUP_VARIABLES = ("f_m", "delta_f0", "f0", "m_c", "snr")


@dataclass(frozen=True)
class SweepGrid:
    """Full description of one benchmark sweep."""

    f0_values: tuple[float, ...] = (47.0, 49.98, 50.0, 50.02, 52.0)
    delta_f0_values: tuple[float, ...] = (0.1, 1.0, 10.0)
    f_m_values: tuple[float, ...] = (0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0)
    m_c_values: tuple[float, ...] = (0.01, 0.8, 1.0)
    snr_values: tuple[float | None, ...] = (None, 10.0, 0.0, -10.0)
    methods: tuple[Method, ...] = (Method.IEC, Method.XCORR, Method.HILBERT, Method.ESPRIT)
    window_length: float = 0.2
    window_shift: int = 2048
    fs: float = 20480.0
    duration: float = 10.0
    base_seed: int = 1729
    k_am: float = 0.05
    h_max: int = 49
    operating_rate: float = 5120.0
    filter_rate: float = 1280.0
    filter_order: int = 100
    filter_band: tuple[float, float] = (46.0, 54.0)
    # band-pass ahead of the phase-derivative method; off runs it on the
    # raw waveform
    hilbert_prefilter: bool = False

    def __post_init__(self) -> None:
        for name in ("f0_values", "delta_f0_values", "f_m_values", "m_c_values",
                     "snr_values", "methods"):
            values = getattr(self, name)
            if len(values) == 0:
                raise ValueError(f"{name} must be non-empty")
            object.__setattr__(self, name, tuple(values))
        object.__setattr__(self, "methods", tuple(Method(m) for m in self.methods))
        for m_c in self.m_c_values:
            if not 0 < m_c <= 1:
                raise ValueError(f"clip level m_c must be in (0, 1], got {m_c}")
        if self.window_shift < 1:
            raise ValueError(f"window_shift must be >= 1, got {self.window_shift}")
        win = self.window_length * self.fs
        if abs(win - round(win)) > 1e-9:
            raise ValueError(
                f"window_length * fs must be an integer sample count, got {win}"
            )
        for rate_a, rate_b, what in (
            (self.fs, self.operating_rate, "fs / operating_rate"),
            (self.operating_rate, self.filter_rate, "operating_rate / filter_rate"),
        ):
            ratio = rate_a / rate_b
            if abs(ratio - round(ratio)) > 1e-9 or ratio < 1:
                raise ValueError(f"{what} must be a whole number, got {ratio}")
        if round(win) % self.decimation_factor != 0:
            raise ValueError(
                f"decimation factor {self.decimation_factor} does not divide the "
                f"{round(win)}-sample window"
            )

    @property
    def decimation_factor(self) -> int:
        return int(round(self.fs / self.operating_rate))

    def configurations(self) -> list[TestSignalSpec]:
        """Grid points in deterministic enumeration order."""
        specs = []
        combos = itertools.product(
            self.f0_values, self.delta_f0_values, self.f_m_values,
            self.m_c_values, self.snr_values,
        )
        for f0, delta_f0, f_m, m_c, snr in combos:
            spec = TestSignalSpec(
                f0=f0, delta_f0=delta_f0, f_m=f_m, k_am=self.k_am, m_c=m_c,
                h_max=self.h_max, snr_db=snr, fs=self.fs,
                duration=self.duration, seed=0,
            )
            specs.append(
                TestSignalSpec(**{**spec.to_dict(), "seed": config_seed(self.base_seed, spec)})
            )
        return specs


def desk_grid(**overrides) -> SweepGrid:
    """Default grid at the desk-scale profile (20,480 Sa/s, 2,048-sample shift)."""
    return SweepGrid(**overrides)


def paper_grid(**overrides) -> SweepGrid:
    """Default grid at the full-rate profile (327,680 Sa/s, 100-sample shift)."""
    params = {"fs": 327680.0, "window_shift": 100}
    params.update(overrides)
    return SweepGrid(**params)


def config_seed(base_seed: int, spec: TestSignalSpec) -> int:
    """Noise seed derived from the configuration's parameter values.

    Hashing the values rather than the grid position means any subset of
    the grid reproduces the same records as the full run.
    """
    payload = {k: v for k, v in spec.to_dict().items() if k != "seed"}
    digest = hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).digest()
    return (base_seed ^ int.from_bytes(digest[:8], "little")) & (2**63 - 1)


def slide_windows(duration: float, fs: float, length: float, shift: int) -> list[WindowSpan]:
    """Window spans [k*shift/fs, k*shift/fs + length] while they fit."""
    if length > duration:
        raise ValueError(f"window length {length} exceeds duration {duration}")
    if shift < 1:
        raise ValueError(f"shift must be >= 1 sample, got {shift}")
    total = int(round(duration * fs))
    win = int(round(length * fs))
    count = (total - win) // int(shift) + 1
    return [WindowSpan(k * shift / fs, length) for k in range(count)]


def compute_error(f0_hat: float, f0_ref: float) -> float:
    """Relative error |f0_hat - f0_ref| / f0_ref."""
    if f0_ref <= 0:
        raise ValueError(f"reference frequency must be positive, got {f0_ref}")
    return abs(f0_hat - f0_ref) / f0_ref


@dataclass(frozen=True)
class ErrorRecord:
    """One (configuration, method, window) estimation outcome."""

    method: Method
    f0: float
    delta_f0: float
    f_m: float
    m_c: float
    snr_db: float | None
    window: WindowSpan
    f0_hat: float
    f0_ref: float
    rel_err: float
    failed: bool

    def group_value(self, variable: str):
        if variable not in GROUP_VARIABLES:
            raise ValueError(
                f"unknown grouping variable {variable!r}; expected one of {GROUP_VARIABLES}"
            )
        return self.snr_db if variable == "snr" else getattr(self, variable)


@dataclass(frozen=True)
class BoxplotSummary:
    """Tukey box statistics for one (method, group value) cell.

    Quartiles use linear interpolation between order statistics; whiskers
    sit at the most extreme data within 1.5 IQR of the quartiles.  Failed
    records are excluded from the statistics and counted separately.
    """

    group_var: str
    group_value: float | None
    method: Method
    n: int
    n_failed: int
    median: float
    q1: float
    q3: float
    whisker_low: float
    whisker_high: float
    outliers_low: tuple[float, ...] = ()
    outliers_high: tuple[float, ...] = ()

    @property
    def n_outliers(self) -> int:
        return len(self.outliers_low) + len(self.outliers_high)


def box_stats(values: np.ndarray) -> dict:
    """Median/quartiles/whiskers/outliers of a 1-D sample (Tukey rule)."""
    values = np.asarray(values, dtype=float)
    q1, median, q3 = np.percentile(values, [25.0, 50.0, 75.0])
    iqr = q3 - q1
    lo_lim, hi_lim = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = values[(values >= lo_lim) & (values <= hi_lim)]
    whisker_low = float(np.min(inside)) if inside.size else float(q1)
    whisker_high = float(np.max(inside)) if inside.size else float(q3)
    return {
        "median": float(median),
        "q1": float(q1),
        "q3": float(q3),
        "whisker_low": whisker_low,
        "whisker_high": whisker_high,
        "outliers_low": tuple(np.sort(values[values < lo_lim]).tolist()),
        "outliers_high": tuple(np.sort(values[values > hi_lim]).tolist()),
    }


def group_stats(records, by: str) -> list[BoxplotSummary]:
    """One :class:`BoxplotSummary` per (method, group value)."""
    records = list(records)
    if not records:
        raise ValueError("no records to summarize")
    if by not in GROUP_VARIABLES:
        raise ValueError(
            f"unknown grouping variable {by!r}; expected one of {GROUP_VARIABLES}"
        )

    groups: dict[tuple, list[ErrorRecord]] = {}
    for rec in records:
        groups.setdefault((rec.method, rec.group_value(by)), []).append(rec)

    method_rank = {m: i for i, m in enumerate(Method)}
    # Numeric group values ascending; the noiseless SNR group sorts last.
    def sort_key(key):
        method, value = key
        return (method_rank[method], value is None, value if value is not None else 0.0)

    summaries = []
    for method, value in sorted(groups, key=sort_key):
        recs = groups[(method, value)]
        good = np.array([r.rel_err for r in recs if not r.failed])
        n_failed = sum(r.failed for r in recs)
        if good.size == 0:
            stats = dict.fromkeys(
                ("median", "q1", "q3", "whisker_low", "whisker_high"), float("nan")
            )
            stats["outliers_low"] = stats["outliers_high"] = ()
        else:
            stats = box_stats(good)
        summaries.append(
            BoxplotSummary(
                group_var=by, group_value=value, method=method,
                n=int(good.size), n_failed=int(n_failed), **stats,
            )
        )
    return summaries


# ---------------------------------------------------------------------------
# Sweep execution


def _operating_windows(grid: SweepGrid) -> list[tuple[int, int]]:
    """(start, length) sample positions at the operating rate.

    Window starts defined on the base-rate grid are snapped to the nearest
    operating-rate sample when the shift is not a multiple of the
    decimation factor; the snapped span is what gets recorded and what the
    reference frequency is averaged over.
    """
    factor = grid.decimation_factor
    total = int(round(grid.fs * grid.duration))
    win = int(round(grid.window_length * grid.fs))
    win_op = win // factor
    max_start_op = (total - win) // factor
    count = (total - win) // grid.window_shift + 1
    starts = []
    for k in range(count):
        start_op = min(round(k * grid.window_shift / factor), max_start_op)
        starts.append((int(start_op), win_op))
    return starts


def _slice_op(op_wave: Waveform, first: int, count: int) -> Waveform:
    return Waveform(
        fs=op_wave.fs,
        samples=op_wave.samples[first : first + count],
        t0=op_wave.t0 + first / op_wave.fs,
    )


def _margined_slice(
    op_wave: Waveform, start: int, count: int, margin: int, ratio: int
) -> Waveform:
    """Window slice extended by the filter transient on each side.

    After band-pass filtering and group-delay trimming the remaining span
    then lines up with the nominal window, mirroring an instrument that
    filters the continuous stream before windowing it.  Margins shrink at
    the record edges and stay multiples of the filter-rate step.
    """
    left = min(margin, start)
    left -= left % ratio
    right = min(margin, len(op_wave) - start - count)
    right -= right % ratio
    return _slice_op(op_wave, start - left, left + count + right)


def estimate_window(
    method: Method,
    op_wave: Waveform,
    start_op: int,
    win_op: int,
    filt: FirFilterSpec,
    hilbert_prefilter: bool = False,
    esprit_max_order: int = 98,
) -> EstimateResult:
    """Run one method on one window of an operating-rate record.

    The band-pass methods receive the window extended by the filter
    transient, so their reported (actual) span matches the nominal window
    wherever the record allows.
    """
    ratio = int(round(op_wave.fs / filt.fs))
    margin = filt.group_delay_samples * ratio
    if method is Method.IEC:
        return estimate_iec(_margined_slice(op_wave, start_op, win_op, margin, ratio), filt)
    if method is Method.XCORR:
        return estimate_autocorr(_slice_op(op_wave, start_op, win_op))
    if method is Method.HILBERT:
        if hilbert_prefilter:
            return estimate_hilbert(
                _margined_slice(op_wave, start_op, win_op, margin, ratio), filt
            )
        return estimate_hilbert(_slice_op(op_wave, start_op, win_op), None)
    est, _ = estimate_esprit(
        _slice_op(op_wave, start_op, win_op), max_model_order=esprit_max_order
    )
    return est


def run_config(grid: SweepGrid, spec: TestSignalSpec) -> list[ErrorRecord]:
    """All records for a single grid configuration.

    The reference frequency of each record is averaged over the span the
    estimator actually used (filtered methods report the delay-trimmed
    span, which the margin extension keeps equal to the nominal window
    away from the record edges).
    """
    wave = synthesize(spec)
    op_wave = decimate(wave, grid.decimation_factor)
    filt = design_bandpass(grid.filter_rate, grid.filter_order, grid.filter_band)

    records = []
    for start_op, win_op in _operating_windows(grid):
        for method in grid.methods:
            est = estimate_window(
                method, op_wave, start_op, win_op, filt,
                hilbert_prefilter=grid.hilbert_prefilter,
                esprit_max_order=2 * grid.h_max,
            )
            f0_ref = reference_f0(est.window, spec)
            rel_err = float("nan") if est.failed else compute_error(est.f0_hat, f0_ref)
            records.append(
                ErrorRecord(
                    method=method, f0=spec.f0, delta_f0=spec.delta_f0,
                    f_m=spec.f_m, m_c=spec.m_c, snr_db=spec.snr_db,
                    window=est.window, f0_hat=est.f0_hat, f0_ref=f0_ref,
                    rel_err=rel_err, failed=est.failed,
                )
            )
    return records


def resolve_workers(workers: int | None = None) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV_VAR, "0")) or os.cpu_count() or 1
    return max(1, workers)


def run_sweep(grid: SweepGrid, workers: int | None = None) -> list[ErrorRecord]:
    """Run every method on every window of every configuration.

    Estimator failures become records with ``failed`` set; they never
    abort the sweep.  Output order is deterministic (configuration, then
    window, then method) regardless of the worker count.
    """
    specs = grid.configurations()
    workers = resolve_workers(workers)
    records: list[ErrorRecord] = []
    if workers == 1 or len(specs) == 1:
        for spec in specs:
            records.extend(run_config(grid, spec))
        return records
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for chunk in pool.map(run_config, itertools.repeat(grid), specs):
            records.extend(chunk)
    return records


# ---------------------------------------------------------------------------
# CSV emission (12 significant digits, UTF-8, Unix newlines, header row)


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def write_records_csv(records, path) -> None:
    path = Path(path)
    with path.open("w", newline="\n", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RECORD_COLUMNS)
        for r in records:
            writer.writerow([
                r.method.value,
                _fmt(r.f0),
                _fmt(r.delta_f0),
                _fmt(r.f_m),
                _fmt(r.m_c),
                "none" if r.snr_db is None else _fmt(r.snr_db),
                _fmt(r.window.start),
                _fmt(r.window.length),
                _fmt(r.f0_hat),
                _fmt(r.f0_ref),
                _fmt(r.rel_err),
                "true" if r.failed else "false",
            ])


def read_records_csv(path) -> list[ErrorRecord]:
    path = Path(path)
    with path.open("r", newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(RECORD_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"records CSV missing columns: {sorted(missing)}")
        records = []
        for row in reader:
            records.append(
                ErrorRecord(
                    method=Method(row["method"]),
                    f0=float(row["f0_hz"]),
                    delta_f0=float(row["delta_f0_hz"]),
                    f_m=float(row["fm_hz"]),
                    m_c=float(row["mc"]),
                    snr_db=None if row["snr_db"] == "none" else float(row["snr_db"]),
                    window=WindowSpan(float(row["window_start_s"]), float(row["window_len_s"])),
                    f0_hat=float(row["f0_hat_hz"]),
                    f0_ref=float(row["f0_ref_hz"]),
                    rel_err=float(row["rel_err"]),
                    failed=row["failed"] == "true",
                )
            )
    return records


def write_summary_csv(summaries, path) -> None:
    path = Path(path)
    with path.open("w", newline="\n", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for s in summaries:
            writer.writerow([
                s.method.value,
                s.group_var,
                "none" if s.group_value is None else _fmt(s.group_value),
                s.n,
                s.n_failed,
                _fmt(s.median),
                _fmt(s.q1),
                _fmt(s.q3),
                _fmt(s.whisker_low),
                _fmt(s.whisker_high),
                s.n_outliers,
            ])
