"""Signal model tests against closed-form and quadrature oracles."""

import json
import math

import numpy as np
import pytest
from scipy.integrate import quad

from gridfreq import (
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


def clipped_fourier_oracle(m_c, h):
    """Analytic Fourier cosine coefficient of clamp(cos, -m_c, m_c).

    Splits one half period at the clip angle: the waveform is +m_c up to
    theta_c = arccos(m_c), the raw cosine in the middle, and -m_c from
    pi - theta_c on.  Independent of the FFT-based implementation.
    """
    tc = math.acos(m_c)

    def antideriv_cos_cos(theta):
        # integral of cos(x) cos(h x)
        if h == 1:
            return theta / 2 + math.sin(2 * theta) / 4
        return math.sin((h - 1) * theta) / (2 * (h - 1)) + math.sin((h + 1) * theta) / (
            2 * (h + 1)
        )

    flat = m_c * math.sin(h * tc) / h  # clipped plateau [0, theta_c]
    middle = antideriv_cos_cos(math.pi - tc) - antideriv_cos_cos(tc)
    tail = m_c * math.sin(h * (math.pi - tc)) / h  # [-m_c plateau, via sin(h pi) = 0]
    return (2 / math.pi) * (flat + middle + tail)


class TestClippedCosineSpectrum:
    def test_matches_analytic_oracle(self):
        for m_c in (0.05, 0.3, 0.8, 0.95):
            spec = clipped_cosine_spectrum(m_c, 25)
            a1 = clipped_fourier_oracle(m_c, 1)
            for h in range(1, 26):
                expected = clipped_fourier_oracle(m_c, h) / a1
                signed = spec.amplitude(h) * math.cos(spec.phase(h))
                assert signed == pytest.approx(expected, abs=1e-6)

    def test_unclipped_is_pure_tone(self):
        spec = clipped_cosine_spectrum(1.0, 50)
        assert spec.amplitude(1) == 1.0
        assert np.all(spec.amplitudes[1:] == 0.0)

    def test_even_harmonics_vanish(self):
        for m_c in (0.01, 0.5, 0.8):
            spec = clipped_cosine_spectrum(m_c, 20)
            assert np.all(spec.amplitudes[1::2] == 0.0)

    def test_square_wave_limit(self):
        # Deep clipping approaches a square wave whose h-th odd harmonic is 1/h.
        spec = clipped_cosine_spectrum(0.01, 9)
        assert spec.amplitude(3) / spec.amplitude(1) == pytest.approx(1 / 3, rel=0.01)

    def test_thd_at_published_clip_level(self):
        assert 0.06 <= clipped_cosine_spectrum(0.8, 49).thd() <= 0.10

    def test_normalization_is_scale_invariant(self):
        # Fourier analysis of a scaled copy of the waveform gives the same
        # normalized amplitudes.
        m_c, h_max, scale = 0.6, 15, 3.7
        n = 1 << 16
        theta = 2 * np.pi * np.arange(n) / n
        wave = scale * np.clip(np.cos(theta), -m_c, m_c)
        coeff = 2 * np.fft.rfft(wave).real / n
        ratios = np.abs(coeff[1 : h_max + 1] / coeff[1])
        spec = clipped_cosine_spectrum(m_c, h_max)
        np.testing.assert_allclose(spec.amplitudes, ratios, atol=1e-9)

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            clipped_cosine_spectrum(0.0, 10)
        with pytest.raises(ValueError):
            clipped_cosine_spectrum(1.5, 10)
        with pytest.raises(ValueError):
            clipped_cosine_spectrum(0.5, 0)


class TestModulator:
    def test_sign_examples(self):
        assert u_mod(0.5, 0.5) == 1.0
        assert u_mod(1.5, 0.5) == -1.0
        assert u_mod(0.0, 1.0) == 1.0  # sign(0) convention

    def test_half_period_boundary_is_positive(self):
        # sin is exactly zero at every half-period boundary; convention +1.
        assert u_mod(0.5, 1.0) == 1.0
        assert u_mod(1.0, 1.0) == 1.0

    def test_array_input(self):
        t = np.array([0.1, 0.6, 1.1, 1.6])
        np.testing.assert_array_equal(u_mod(t, 1.0), [1.0, -1.0, 1.0, -1.0])

    def test_rejects_nonpositive_f_m(self):
        with pytest.raises(ValueError):
            u_mod(0.1, 0.0)


class TestModulatorIntegral:
    @pytest.mark.parametrize("f_m", [0.2, 1.0, 5.0, 20.0])
    def test_closed_form_landmarks(self, f_m):
        assert u_mod_integral(1 / (4 * f_m), f_m) == pytest.approx(1 / (4 * f_m), abs=1e-15)
        assert u_mod_integral(1 / (2 * f_m), f_m) == pytest.approx(1 / (2 * f_m), abs=1e-15)
        assert u_mod_integral(1 / f_m, f_m) == pytest.approx(0.0, abs=1e-15)

    def test_continuity(self):
        rng = np.random.default_rng(7)
        t = rng.uniform(0, 10, 500)
        for eps in (1e-6, 1e-3, 0.05):
            delta = np.abs(
                np.asarray(u_mod_integral(t + eps, 2.0)) - np.asarray(u_mod_integral(t, 2.0))
            )
            assert np.all(delta <= eps + 1e-12)

    def test_matches_quadrature(self):
        # Independent oracle: adaptive quadrature of the sign function with
        # breakpoints at the modulator flips.
        f_m = 2.0
        for t_end in (0.13, 0.4, 0.77, 1.9):
            flips = np.arange(1, int(2 * f_m * t_end) + 1) / (2 * f_m)
            val, err = quad(
                lambda t: math.copysign(1.0, math.sin(2 * math.pi * f_m * t) or 1.0),
                0.0,
                t_end,
                points=flips.tolist(),
                limit=200,
            )
            assert u_mod_integral(t_end, f_m) == pytest.approx(val, abs=max(1e-10, err))


class TestSpecValidation:
    def test_defaults_are_valid(self):
        spec = TestSignalSpec()
        assert spec.n_samples == 204800

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"m_c": 0.0},
            {"m_c": 1.2},
            {"f0": -1.0},
            {"f_m": 0.0},
            {"k_am": -0.1},
            {"h_max": 0},
            {"duration": 0.0},
            {"fs": 2000.0},  # aliases the 49th harmonic
            {"duration": 10.0001},  # non-integer sample count
        ],
    )
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ValueError):
            TestSignalSpec(**kwargs)

    def test_dict_round_trip_rejects_unknown_keys(self):
        spec = TestSignalSpec(snr_db=10.0, seed=42)
        assert TestSignalSpec.from_dict(spec.to_dict()) == spec
        with pytest.raises(ValueError, match="unknown"):
            TestSignalSpec.from_dict({**spec.to_dict(), "bogus": 1})


class TestSynthesize:
    def test_pure_tone_rms(self):
        spec = TestSignalSpec(
            f0=50.0, delta_f0=0.0, f_m=1.0, k_am=0.0, m_c=1.0, snr_db=None,
            fs=20480.0, duration=1.0, seed=0,
        )
        wave = synthesize(spec)
        rms = np.sqrt(np.mean(wave.samples**2))
        assert rms == pytest.approx(1 / np.sqrt(2), abs=1e-9)

    def test_snr_realization(self):
        base = dict(f0=50.0, delta_f0=0.0, f_m=1.0, k_am=0.0, m_c=1.0,
                    fs=20480.0, duration=10.0, seed=99)
        clean = synthesize(TestSignalSpec(snr_db=None, **base))
        noisy = synthesize(TestSignalSpec(snr_db=0.0, **base))
        noise = noisy.samples - clean.samples
        ratio = np.mean(noise**2) / np.mean(clean.samples**2)
        assert ratio == pytest.approx(1.0, rel=0.05)

    def test_amplitude_modulation_envelope(self):
        spec = TestSignalSpec(
            f0=50.0, delta_f0=0.0, f_m=1.0, k_am=0.05, m_c=1.0, snr_db=None,
            fs=20480.0, duration=1.0, seed=0,
        )
        x = synthesize(spec).samples
        # stay clear of the flip sample itself, where sign(0) := +1 applies
        first_half = np.max(np.abs(x[1024:9216]))
        second_half = np.max(np.abs(x[11264:19456]))
        assert first_half == pytest.approx(1.05, abs=1e-3)
        assert second_half == pytest.approx(0.95, abs=1e-3)

    def test_deterministic_across_calls(self):
        spec = TestSignalSpec(snr_db=-10.0, seed=1234, duration=1.0)
        a = synthesize(spec).samples
        b = synthesize(spec).samples
        assert np.array_equal(a, b)

    def test_clean_tone_has_single_dft_line(self):
        spec = TestSignalSpec(
            f0=50.0, delta_f0=0.0, f_m=1.0, k_am=0.0, m_c=1.0, snr_db=None,
            fs=20480.0, duration=1.0, seed=0,
        )
        spectrum = np.abs(np.fft.rfft(synthesize(spec).samples))
        fundamental = spectrum[50]
        rest = np.delete(spectrum, 50)
        floor = fundamental * 10 ** (-250 / 20)
        assert np.all(rest < floor)

    def test_rejects_invalid_spec_fields(self):
        with pytest.raises(ValueError):
            synthesize(TestSignalSpec(m_c=2.0))


class TestInstantaneousFrequency:
    def test_no_deviation(self):
        spec = TestSignalSpec(delta_f0=0.0)
        assert f0_inst(0.123, spec) == spec.f0

    def test_half_period_values(self):
        spec = TestSignalSpec(f0=50.0, delta_f0=1.0, f_m=1.0)
        assert f0_inst(0.25, spec) == 51.0
        spec10 = TestSignalSpec(f0=50.0, delta_f0=10.0, f_m=1.0)
        assert f0_inst(0.75, spec10) == 40.0


class TestReferenceFrequency:
    def test_inside_positive_half_period(self):
        spec = TestSignalSpec(f0=50.0, delta_f0=1.0, f_m=1.0)
        assert reference_f0(WindowSpan(0.05, 0.2), spec) == pytest.approx(51.0, abs=1e-12)

    def test_centered_on_transition(self):
        spec = TestSignalSpec(f0=50.0, delta_f0=10.0, f_m=1.0)
        assert reference_f0(WindowSpan(0.4, 0.2), spec) == pytest.approx(50.0, abs=1e-12)

    def test_whole_modulator_period(self):
        spec = TestSignalSpec(f0=50.0, delta_f0=1.0, f_m=5.0)
        window = WindowSpan(0.0, 0.2)
        assert reference_f0(window, spec) == pytest.approx(50.0, abs=1e-9)
        # coarse numerical averaging agrees at its own resolution
        t = window.start + window.length * (np.arange(1_000_000) + 0.5) / 1_000_000
        assert np.mean(f0_inst(t, spec)) == pytest.approx(50.0, abs=1e-5)

    def test_closed_form_matches_quadrature(self):
        spec = TestSignalSpec(f0=50.0, delta_f0=10.0, f_m=2.0)

        def inst(t):
            frac = (t * spec.f_m) % 1.0
            return spec.f0 + spec.delta_f0 * (1.0 if frac <= 0.5 else -1.0)

        rng = np.random.default_rng(3)
        for _ in range(20):
            start = rng.uniform(0, 9.0)
            length = rng.uniform(0.05, 0.8)
            flips = np.arange(0, 10 * 2 * spec.f_m) / (2 * spec.f_m)
            inner = flips[(flips > start) & (flips < start + length)]
            val, err = quad(inst, start, start + length, points=inner.tolist(), limit=300)
            expected = val / length
            got = reference_f0(WindowSpan(start, length), spec)
            assert got == pytest.approx(expected, abs=max(1e-9, 2 * err / length))

    def test_rejects_window_outside_record(self):
        spec = TestSignalSpec(duration=1.0)
        with pytest.raises(ValueError):
            reference_f0(WindowSpan(0.9, 0.2), spec)


class TestWaveformFile:
    def test_round_trip(self, tmp_path):
        spec = TestSignalSpec(duration=0.1, snr_db=5.0, seed=7)
        wave = synthesize(spec)
        path = tmp_path / "wave.f64"
        save_waveform(wave, path, spec=spec)

        loaded, loaded_spec = load_waveform(path)
        assert loaded.fs == wave.fs
        assert loaded.t0 == wave.t0
        assert np.array_equal(loaded.samples, wave.samples)
        assert loaded_spec == spec

        meta = json.loads((tmp_path / "wave.f64.json").read_text())
        assert meta["fs"] == wave.fs
        assert meta["spec"]["snr_db"] == 5.0

    def test_raw_layout_is_little_endian_float64(self, tmp_path):
        wave = Waveform(fs=100.0, samples=np.array([1.0, -2.5, 3.25]))
        path = tmp_path / "w.f64"
        save_waveform(wave, path)
        raw = np.frombuffer(path.read_bytes(), dtype="<f8")
        np.testing.assert_array_equal(raw, wave.samples)
