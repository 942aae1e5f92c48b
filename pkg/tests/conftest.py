"""Shared fixtures: operating-rate test windows and the default band-pass."""

import numpy as np
import pytest

from gridfreq import TestSignalSpec, Waveform, design_bandpass

TestSignalSpec.__test__ = False  # dataclass, not a test case

OPERATING_RATE = 5120.0
FILTER_RATE = 1280.0
WINDOW_SAMPLES = 1024  # 200 ms at the operating rate


@pytest.fixture(scope="session")
def bandpass():
    return design_bandpass(FILTER_RATE)


def tone_window(freq, amp=1.0, phase=0.0, fs=OPERATING_RATE, n=WINDOW_SAMPLES,
                damping=0.0, t0=0.0):
    """Real (optionally damped) tone sampled at the operating rate."""
    t = np.arange(n) / fs
    x = amp * np.cos(2 * np.pi * freq * t + phase) * np.exp(damping * t)
    return Waveform(fs=fs, samples=x, t0=t0)
