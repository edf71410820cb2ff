import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evosc.errors import ParameterError
from evosc.rate import RateSignal, SIGNED
from evosc.spectral import (
    HANN,
    RECTANGULAR,
    band_bin_range,
    band_energy,
    dft_naive,
    fft,
    periodogram,
    spectrogram,
    welch,
    write_psd_csv,
    write_spectrogram_csv,
)


def rate_from_values(values, dt=0.01):
    values = np.asarray(values, dtype=np.float64)
    on = np.maximum(values, 0).astype(np.int64)
    off = np.maximum(-values, 0).astype(np.int64)
    # integer-valued test signals only; non-integer signals go through kind-specific ctors
    if np.array_equal(values, (on - off).astype(float)):
        return RateSignal(dt, 0, on, off, values, SIGNED)
    zeros = np.zeros(len(values), np.int64)
    return RateSignal(dt, 0, zeros, zeros, values - values.mean(), "zero_mean")


def sinusoid_rate(freq=2.0, n=500, dt=0.01, amplitude=1.0):
    k = np.arange(n)
    values = amplitude * np.sin(2 * np.pi * freq * k * dt)
    zeros = np.zeros(n, np.int64)
    return RateSignal(dt, 0, zeros, zeros, values - values.mean(), "zero_mean")


def rel_sup_error(a, b):
    scale = max(np.max(np.abs(b)), 1e-300)
    return np.max(np.abs(a - b)) / scale


# ---------------------------------------------------------------------------
# dft_naive / fft


def test_dft_impulse_flat():
    spec = dft_naive([1.0, 0.0, 0.0, 0.0])
    assert len(spec.bins) == 3
    assert np.allclose(spec.magnitudes, 1.0, atol=1e-12)


def test_dft_constant_dc_only():
    n, c = 16, 2.5
    spec = dft_naive(np.full(n, c))
    assert abs(spec.magnitudes[0] - n * c) <= 1e-9
    assert np.all(spec.magnitudes[1:] <= 1e-9)


@pytest.mark.parametrize("j", [1, 3, 7])
def test_dft_cosine_single_bin(j):
    n = 32
    k = np.arange(n)
    spec = dft_naive(np.cos(2 * np.pi * j * k / n))
    mags = spec.magnitudes.copy()
    assert np.argmax(mags) == j
    assert abs(mags[j] - n / 2) <= 1e-9
    mags[j] = 0.0
    assert np.all(mags <= 1e-9 * n)


def test_fft_matches_dft_small_lengths(rng):
    for n in list(range(1, 33)) + [500]:
        x = rng.normal(size=n)
        assert rel_sup_error(fft(x).bins, dft_naive(x).bins) <= 1e-9


def test_fft_zero_signal():
    assert np.all(fft(np.zeros(37)).magnitudes == 0.0)


def test_fft_linearity(rng):
    x = rng.normal(size=100)
    y = rng.normal(size=100)
    lhs = fft(x + y).bins
    rhs = fft(x).bins + fft(y).bins
    assert rel_sup_error(lhs, rhs) <= 1e-9


def test_fft_native_length_grid():
    # 500 samples at 10 ms put 2 Hz exactly on bin 10
    spec = fft(np.sin(2 * np.pi * 2.0 * 0.01 * np.arange(500)), dt=0.01)
    assert len(spec.bins) == 251
    assert spec.df == pytest.approx(0.2)
    assert np.argmax(spec.magnitudes) == 10


def test_dft_rejects_empty():
    with pytest.raises(ParameterError):
        dft_naive([])


# ---------------------------------------------------------------------------
# periodogram


def test_periodogram_zero_signal():
    psd = periodogram(rate_from_values(np.zeros(64)))
    assert not psd.power.any()


def test_periodogram_sinusoid_dominant_bin():
    psd = periodogram(sinusoid_rate(freq=2.0, n=500, dt=0.01, amplitude=3.0))
    peak = int(np.argmax(psd.power))
    assert peak == 10  # exactly 2.0 Hz
    assert psd.power[peak] / psd.power.sum() >= 0.99


def test_periodogram_parseval(rng):
    for _ in range(20):
        n = int(rng.integers(8, 300))
        values = rng.normal(size=n)
        psd = periodogram(rate_from_values(values, dt=0.02))
        time_ms = float(np.mean((values - values.mean()) ** 2))
        spec_ms = float(psd.power.sum() * psd.df)
        assert abs(spec_ms - time_ms) <= 1e-6 * max(time_ms, 1e-30)


def test_periodogram_needs_two_samples():
    with pytest.raises(ParameterError):
        periodogram(rate_from_values([1.0]))


# ---------------------------------------------------------------------------
# welch


def test_welch_single_segment_equals_periodogram(rng):
    values = rng.normal(size=256)
    signal = rate_from_values(values)
    p = periodogram(signal)
    w = welch(signal, segment_len=256, overlap=0.0, window=RECTANGULAR)
    assert np.max(np.abs(w.power - p.power)) <= 1e-9 * max(1.0, p.power.max())
    assert w.df == p.df


def test_welch_peak_near_2hz():
    signal = sinusoid_rate(freq=2.0, n=500, dt=0.01)
    w = welch(signal, segment_len=125, overlap=0.5, window=HANN)
    p = periodogram(signal)
    f_w = float(np.argmax(w.power)) * w.df
    f_p = float(np.argmax(p.power)) * p.df
    assert abs(f_w - 2.0) <= w.df
    assert abs(f_w - f_p) <= w.df


def test_welch_lower_variance_than_periodogram(rng):
    ratios = []
    for _ in range(50):
        values = rng.normal(size=512)
        signal = rate_from_values(values)
        p = periodogram(signal)
        w = welch(signal, segment_len=64, overlap=0.5, window=HANN)
        ratios.append(np.var(w.power) / np.var(p.power))
    assert float(np.median(ratios)) < 1.0


def test_welch_parseval_on_tiling_segments(rng):
    # non-overlapping rectangular segments that tile the signal exactly
    values = rng.normal(size=512)
    signal = rate_from_values(values, dt=0.01)
    w = welch(signal, segment_len=128, overlap=0.0, window=RECTANGULAR)
    time_ms = float(np.mean((values - values.mean()) ** 2))
    assert abs(w.power.sum() * w.df - time_ms) <= 1e-6 * time_ms


def test_welch_segment_too_long():
    with pytest.raises(ParameterError):
        welch(rate_from_values(np.zeros(64)), segment_len=65, overlap=0.0)


# ---------------------------------------------------------------------------
# band energy


def test_band_energy_zero_signal():
    psd = periodogram(rate_from_values(np.zeros(64)))
    feat = band_energy(psd, 1.8, 2.2)
    assert feat.normalized == 0.0 and feat.band_energy == 0.0


def test_band_energy_sinusoid_in_and_out_of_band():
    psd = periodogram(sinusoid_rate(freq=2.0, n=500, dt=0.01))
    assert band_energy(psd, 1.8, 2.2).normalized >= 0.95
    assert band_energy(psd, 4.0, 6.0).normalized <= 0.01


def test_band_bin_range_inclusive_edges():
    # df = 0.2: [1.8, 2.2] must cover bins 9, 10, 11 despite float rounding
    assert band_bin_range(0.2, 251, 1.8, 2.2) == (9, 11)
    assert band_bin_range(0.2, 251, 0.0, 50.0) == (0, 250)


def test_band_energy_inclusive_sum_matches_manual():
    psd = periodogram(sinusoid_rate(freq=2.0, n=500, dt=0.01))
    feat = band_energy(psd, 1.8, 2.2)
    manual = float(psd.power[9:12].sum() * psd.df)
    assert feat.band_energy == pytest.approx(manual, rel=1e-12)


def test_band_energy_empty_band_is_zero():
    psd = periodogram(sinusoid_rate(freq=2.0, n=500, dt=0.01))
    feat = band_energy(psd, 0.01, 0.05)  # below the first non-DC bin
    assert feat.band_energy == 0.0 and feat.normalized == 0.0


def test_band_energy_full_band_is_one(rng):
    psd = periodogram(rate_from_values(rng.normal(size=100)))
    nyq = (len(psd.power) - 1) * psd.df
    assert band_energy(psd, 0.0, nyq).normalized == pytest.approx(1.0, rel=1e-12)


def test_band_energy_rejects_bad_band():
    psd = periodogram(rate_from_values(np.zeros(16)))
    with pytest.raises(ParameterError):
        band_energy(psd, 2.0, 2.0)
    with pytest.raises(ParameterError):
        band_energy(psd, -1.0, 2.0)


@settings(max_examples=50, deadline=None)
@given(
    seed=st.integers(0, 10_000),
    lo=st.floats(0.0, 20.0),
    width=st.floats(0.1, 20.0),
    widen=st.floats(0.0, 10.0),
)
def test_band_energy_monotone_in_width(seed, lo, width, widen):
    gen = np.random.default_rng(seed)
    psd = periodogram(rate_from_values(gen.normal(size=64)))
    inner = band_energy(psd, lo, lo + width)
    outer = band_energy(psd, max(lo - widen, 0.0), lo + width + widen)
    assert outer.band_energy >= inner.band_energy - 1e-15
    assert 0.0 <= inner.normalized <= 1.0


# ---------------------------------------------------------------------------
# spectrogram


def test_spectrogram_column_count():
    signal = rate_from_values(np.zeros(1000))
    spec = spectrogram(signal, window_len=500, hop=100)
    assert len(spec.columns) == (1000 - 500) // 100 + 1
    assert spec.column_times[0] == pytest.approx(250 * 0.01)


def test_spectrogram_stationary_sinusoid_argmax():
    signal = sinusoid_rate(freq=2.0, n=3000, dt=0.01)
    spec = spectrogram(signal, window_len=500, hop=250)
    for col in spec.columns:
        assert int(np.argmax(col.power)) == 10


def test_spectrogram_too_short():
    with pytest.raises(ParameterError):
        spectrogram(rate_from_values(np.zeros(100)), window_len=200, hop=10)


def test_spectrogram_chirp_monotone_argmax():
    dt, total = 0.01, 60.0
    k = np.arange(int(total / dt))
    t = k * dt
    phase = t + 2.0 * t**2 / total  # instantaneous frequency 1 + 4 t / total
    values = np.sin(2 * np.pi * phase)
    signal = rate_from_values(values - values.mean())
    spec = spectrogram(signal, window_len=500, hop=250)
    freqs = np.array([np.argmax(c.power) for c in spec.columns]) * spec.df
    assert np.all(np.diff(freqs) >= -spec.df * 1.001)  # one-bin jitter allowed
    assert freqs[-1] > freqs[0] + 2.0


# ---------------------------------------------------------------------------
# exports


def test_psd_csv_export(tmp_path):
    psd = periodogram(sinusoid_rate())
    path = tmp_path / "psd.csv"
    write_psd_csv(psd, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "f_hz,power"
    assert len(lines) == len(psd.power) + 1
    f, p = lines[11].split(",")
    assert float(f) == pytest.approx(10 * psd.df)
    assert float(p) == pytest.approx(psd.power[10])


def test_spectrogram_csv_export(tmp_path):
    spec = spectrogram(sinusoid_rate(n=1500), window_len=500, hop=500)
    path = tmp_path / "spec.csv"
    write_spectrogram_csv(spec, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "t_s,f_hz,power"
    assert len(lines) == 1 + len(spec.columns) * len(spec.columns[0].power)
