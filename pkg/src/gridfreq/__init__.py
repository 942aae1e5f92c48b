"""Benchmark for fundamental-frequency estimation in fluctuating, distorted grids."""

from .signal_model import (
    HarmonicSpectrum,
    TestSignalSpec,
    Waveform,
    WindowSpan,
    clipped_cosine_spectrum,
    f0_inst,
    load_waveform,
    reference_f0,
    save_waveform,
    synthesize,
    u_mod,
    u_mod_integral,
)
from .estimators import (
    EspritComponent,
    EspritModel,
    EstimateResult,
    FirFilterSpec,
    Method,
    decimate,
    design_bandpass,
    estimate_autocorr,
    estimate_esprit,
    estimate_hilbert,
    estimate_iec,
)
from .harness import (
    BoxplotSummary,
    ErrorRecord,
    SweepGrid,
    box_stats,
    compute_error,
    config_seed,
    desk_grid,
    group_stats,
    paper_grid,
    read_records_csv,
    run_sweep,
    slide_windows,
    write_records_csv,
    write_summary_csv,
)

__version__ = "0.1.0"

__all__ = [
    "BoxplotSummary",
    "ErrorRecord",
    "EspritComponent",
    "EspritModel",
    "EstimateResult",
    "FirFilterSpec",
    "HarmonicSpectrum",
    "Method",
    "SweepGrid",
    "TestSignalSpec",
    "Waveform",
    "WindowSpan",
    "box_stats",
    "clipped_cosine_spectrum",
    "compute_error",
    "config_seed",
    "decimate",
    "design_bandpass",
    "desk_grid",
    "estimate_autocorr",
    "estimate_esprit",
    "estimate_hilbert",
    "estimate_iec",
    "f0_inst",
    "group_stats",
    "load_waveform",
    "paper_grid",
    "read_records_csv",
    "reference_f0",
    "run_sweep",
    "save_waveform",
    "slide_windows",
    "synthesize",
    "u_mod",
    "u_mod_integral",
    "write_records_csv",
    "write_summary_csv",
]
