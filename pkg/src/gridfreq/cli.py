"""Command-line entry points tying generation, estimation and statistics together.

Subcommands:

* ``synth``    - synthesize one test signal and write it with its sidecar.
* ``estimate`` - run one method over sliding windows of a stored waveform.
* ``sweep``    - run a full parameter sweep and write the records CSV.
* ``stats``    - aggregate a records CSV into grouped box statistics.

Configuration files are flat JSON objects; unknown keys are rejected and
defaults fill anything omitted.  ``--set key=value`` overrides individual
keys after the file is read.  The worker count for sweeps comes from the
GRIDFREQ_WORKERS environment variable unless --workers is given.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields
from pathlib import Path

from .estimators import Method, design_bandpass, decimate
from .harness import (
    SweepGrid,
    desk_grid,
    estimate_window,
    group_stats,
    paper_grid,
    read_records_csv,
    run_sweep,
    slide_windows,
    write_records_csv,
    write_summary_csv,
)
from .signal_model import TestSignalSpec, load_waveform, save_waveform, synthesize

# CLI spellings of the grouping variables mapped onto the harness names.
GROUP_BY_CHOICES = {
    "fm": "f_m",
    "delta_f0": "delta_f0",
    "f0": "f0",
    "mc": "m_c",
    "snr": "snr",
}

PROFILES = {"desk": desk_grid, "paper": paper_grid}


class ConfigError(ValueError):
    """Malformed or invalid configuration input."""


def _load_json_object(path) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object at the top level")
    return data


def _parse_override(text: str) -> tuple[str, object]:
    key, sep, raw = text.partition("=")
    if not sep or not key:
        raise ConfigError(f"override {text!r} must look like key=value")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw  # bare strings allowed, e.g. --set snr_values='[null,10]'
    return key, value


def _coerce_grid(data: dict) -> SweepGrid:
    """Validated SweepGrid from a flat JSON mapping (unknown keys rejected)."""
    known = {f.name for f in fields(SweepGrid)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown sweep config keys: {sorted(unknown)}")
    if "snr_values" in data:
        data["snr_values"] = tuple(
            None if v in (None, "none") else float(v) for v in data["snr_values"]
        )
    if "methods" in data:
        try:
            data["methods"] = tuple(Method(m) for m in data["methods"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    try:
        return SweepGrid(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid sweep config: {exc}") from exc


def parse_sweep_config(path=None, profile: str = "desk", overrides=()) -> SweepGrid:
    """Grid from profile defaults, then the config file, then --set overrides."""
    base = PROFILES[profile]()
    data = {f.name: getattr(base, f.name) for f in fields(SweepGrid)}
    if path is not None:
        data.update(_load_json_object(path))
    for text in overrides:
        key, value = _parse_override(text)
        data[key] = value
    return _coerce_grid(data)


def parse_signal_config(path=None, overrides=()) -> TestSignalSpec:
    """Signal spec from defaults, then the config file, then overrides."""
    data: dict = {}
    if path is not None:
        data.update(_load_json_object(path))
    for text in overrides:
        key, value = _parse_override(text)
        data[key] = value
    try:
        return TestSignalSpec.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid signal config: {exc}") from exc


def _cmd_synth(args) -> int:
    spec = parse_signal_config(args.config, args.set or ())
    if args.seed is not None:
        spec = TestSignalSpec.from_dict({**spec.to_dict(), "seed": args.seed})
    wave = synthesize(spec)
    save_waveform(wave, args.out, spec=spec)
    print(f"wrote {spec.n_samples} samples to {args.out}")
    return 0


def _cmd_estimate(args) -> int:
    wave, spec = load_waveform(args.input)
    grid_defaults = desk_grid()
    op_rate = args.operating_rate or grid_defaults.operating_rate
    factor = int(round(wave.fs / op_rate))
    if factor < 1 or abs(wave.fs / op_rate - factor) > 1e-9:
        raise ConfigError(
            f"waveform rate {wave.fs} is not an integer multiple of the "
            f"operating rate {op_rate}"
        )
    shift = args.window_shift or max(1, int(round(wave.fs * 0.1)))
    windows = slide_windows(wave.duration, wave.fs, args.window_length, shift)
    filt = design_bandpass(grid_defaults.filter_rate, grid_defaults.filter_order,
                           grid_defaults.filter_band)
    method = Method(args.method)

    op_wave = decimate(wave, factor)
    win_op = int(round(args.window_length * op_rate))
    lines = ["method,window_start_s,window_len_s,f0_hat_hz,failed"]
    for span in windows:
        start_op = min(round(span.start * op_rate), len(op_wave) - win_op)
        est = estimate_window(method, op_wave, int(start_op), win_op, filt)
        lines.append(
            f"{method.value},{est.window.start:.12g},{est.window.length:.12g},"
            f"{est.f0_hat:.12g},{'true' if est.failed else 'false'}"
        )
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {len(windows)} window estimates to {args.out}")
    return 0


def _cmd_sweep(args) -> int:
    grid = parse_sweep_config(args.config, args.profile, args.set or ())
    if args.seed is not None:
        grid = _coerce_grid(
            {**{f.name: getattr(grid, f.name) for f in fields(SweepGrid)},
             "base_seed": args.seed}
        )
    records = run_sweep(grid, workers=args.workers)
    write_records_csv(records, args.out)
    n_failed = sum(r.failed for r in records)
    print(f"wrote {len(records)} records to {args.out} ({n_failed} failed estimates)")
    return 0


def _cmd_stats(args) -> int:
    records = read_records_csv(args.input)
    summaries = group_stats(records, GROUP_BY_CHOICES[args.group_by])
    write_summary_csv(summaries, args.out)
    print(f"wrote {len(summaries)} summary rows to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridfreq",
        description="Fundamental-frequency estimation benchmark for fluctuating, "
        "distorted power-grid signals.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a test signal")
    p.add_argument("--config", type=Path, default=None, help="signal spec JSON")
    p.add_argument("--out", type=Path, required=True, help="output waveform file")
    p.add_argument("--seed", type=int, default=None, help="override the noise seed")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("estimate", help="estimate f0 per window of a stored waveform")
    p.add_argument("--method", required=True, choices=[m.value for m in Method])
    p.add_argument("--input", type=Path, required=True, help="waveform file")
    p.add_argument("--out", type=Path, required=True, help="output CSV")
    p.add_argument("--window-length", type=float, default=0.2)
    p.add_argument("--window-shift", type=int, default=None,
                   help="shift in input samples (default: 0.1 s worth)")
    p.add_argument("--operating-rate", type=float, default=None)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("sweep", help="run a parameter sweep")
    p.add_argument("--config", type=Path, default=None, help="sweep grid JSON")
    p.add_argument("--out", type=Path, required=True, help="records CSV")
    p.add_argument("--profile", choices=sorted(PROFILES), default="desk")
    p.add_argument("--seed", type=int, default=None, help="override base_seed")
    p.add_argument("--workers", type=int, default=None,
                   help=f"process count (default: ${'{'}GRIDFREQ_WORKERS{'}'} or all cores)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("stats", help="grouped box statistics from a records CSV")
    p.add_argument("--input", type=Path, required=True, help="records CSV")
    p.add_argument("--group-by", required=True, choices=sorted(GROUP_BY_CHOICES))
    p.add_argument("--out", type=Path, required=True, help="summary CSV")
    p.set_defaults(func=_cmd_stats)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
