"""Fourier-domain machinery for rate signals.

All spectra are one-sided with bins at f = 0, df, ..., floor(n/2)*df and
df = 1/(n*dt). PSDs follow the Parseval convention: summing power*df over
all bins (DC included) recovers the time-domain mean square, with the
factor-2 doubling applied to every bin except DC and, for even n, Nyquist.
Band energies therefore normalize to a ratio in [0, 1] regardless of the
underlying transform scale.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ParameterError
from .rate import RateSignal

PERIODOGRAM = "periodogram"
WELCH = "welch"
RECTANGULAR = "rectangular"
HANN = "hann"


@dataclass(frozen=True)
class Spectrum:
    n: int  # input length
    df: float  # Hz
    bins: np.ndarray  # complex one-sided coefficients
    magnitudes: np.ndarray = field(init=False)

    def __post_init__(self):
        if len(self.bins) != self.n // 2 + 1:
            raise ParameterError("one-sided bin count must be floor(n/2) + 1")
        object.__setattr__(self, "magnitudes", np.abs(self.bins))
        self.bins.setflags(write=False)
        self.magnitudes.setflags(write=False)

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(len(self.bins)) * self.df


@dataclass(frozen=True)
class PsdEstimate:
    df: float  # Hz
    power: np.ndarray  # non-negative, one per one-sided bin
    method: str

    def __post_init__(self):
        self.power.setflags(write=False)

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(len(self.power)) * self.df

    @property
    def total_energy(self) -> float:
        return float(self.power.sum() * self.df)


@dataclass(frozen=True)
class BandEnergyFeature:
    f_l: float
    f_u: float
    band_energy: float
    total_energy: float
    normalized: float


@dataclass(frozen=True)
class Spectrogram:
    window_len: int  # bins per column
    hop: int  # bins between column starts
    columns: tuple  # of PsdEstimate
    column_times: np.ndarray  # seconds, center of each column's span

    @property
    def df(self) -> float:
        return self.columns[0].df

    def power_matrix(self) -> np.ndarray:
        return np.stack([c.power for c in self.columns])


# ---------------------------------------------------------------------------
# transforms


def dft_naive(signal, dt: float = 1.0) -> Spectrum:
    """Direct O(n^2) one-sided DFT; the correctness oracle for :func:`fft`."""
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1 or x.size < 1:
        raise ParameterError("signal must be a non-empty 1-D sequence")
    return Spectrum(n=x.size, df=1.0 / (x.size * dt), bins=_kernels.dft_onesided(x))


def fft(signal, dt: float = 1.0) -> Spectrum:
    """One-sided fast Fourier transform at the native signal length.

    Mixed-radix, so non-power-of-two lengths (e.g. 500 bins for a 5 s window
    at 10 ms) keep their exact frequency grid: df = 1/(n*dt).
    """
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1 or x.size < 1:
        raise ParameterError("signal must be a non-empty 1-D sequence")
    return Spectrum(n=x.size, df=1.0 / (x.size * dt), bins=np.fft.rfft(x))


def _onesided_doubling(n: int) -> np.ndarray:
    scale = np.full(n // 2 + 1, 2.0)
    scale[0] = 1.0
    if n % 2 == 0:
        scale[-1] = 1.0
    return scale


def _power_rows(values: np.ndarray, dt: float) -> np.ndarray:
    """Row-wise one-sided PSD of a 2-D array of signals (Parseval convention)."""
    n = values.shape[-1]
    spec = np.fft.rfft(values, axis=-1)
    return (np.abs(spec) ** 2) * (_onesided_doubling(n) * (dt / n))


def periodogram(rate: RateSignal) -> PsdEstimate:
    """PSD from the squared transform magnitude of the whole signal."""
    if len(rate) < 2:
        raise ParameterError("periodogram needs at least 2 samples")
    power = _power_rows(rate.values[None, :], rate.bin_width_dt)[0]
    return PsdEstimate(df=1.0 / (len(rate) * rate.bin_width_dt), power=power, method=PERIODOGRAM)


def _window_taper(name: str, length: int) -> np.ndarray:
    if name == RECTANGULAR:
        return np.ones(length)
    if name == HANN:
        return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(length) / length)
    raise ParameterError(f"unknown window {name!r}")


def _welch_rows(values: np.ndarray, dt: float, segment_len: int, overlap: float,
                window: str) -> np.ndarray:
    """Row-wise Welch PSD of a 2-D array of signals."""
    n = values.shape[-1]
    if not 2 <= segment_len <= n:
        raise ParameterError(f"segment length {segment_len} not in [2, {n}]")
    if not 0.0 <= overlap < 1.0:
        raise ParameterError("overlap must be in [0, 1)")
    taper = _window_taper(window, segment_len)
    hop = max(1, int(round(segment_len * (1.0 - overlap))))
    starts = range(0, n - segment_len + 1, hop)
    doubling = _onesided_doubling(segment_len)
    acc = np.zeros((values.shape[0], segment_len // 2 + 1))
    count = 0
    for s in starts:
        seg = values[:, s : s + segment_len] * taper
        acc += (np.abs(np.fft.rfft(seg, axis=-1)) ** 2) * doubling
        count += 1
    return acc * (dt / (count * float(np.sum(taper**2))))


def welch(rate: RateSignal, segment_len: int, overlap: float, window: str = HANN) -> PsdEstimate:
    """Average of windowed segment periodograms with window-power compensation.

    With a single full-length rectangular segment this reduces bin-for-bin to
    :func:`periodogram`.
    """
    power = _welch_rows(rate.values[None, :], rate.bin_width_dt, segment_len, overlap, window)[0]
    return PsdEstimate(df=1.0 / (segment_len * rate.bin_width_dt), power=power, method=WELCH)


# ---------------------------------------------------------------------------
# band energy


def band_bin_range(df: float, n_bins: int, f_l: float, f_u: float):
    """Inclusive index range [j_lo, j_hi] of bins with f_l <= j*df <= f_u.

    Edges are compared with a 1e-9-bin slack so that e.g. 11 * 0.2 still
    counts as <= 2.2. Returns j_lo > j_hi when the band contains no bins.
    """
    j_lo = max(int(np.ceil(f_l / df - 1e-9)), 0)
    j_hi = min(int(np.floor(f_u / df + 1e-9)), n_bins - 1)
    return j_lo, j_hi


def band_energy(psd: PsdEstimate, f_l: float, f_u: float) -> BandEnergyFeature:
    """Energy in [f_l, f_u] (both edges inclusive) and its normalized ratio.

    The normalizer is the total energy over all bins, DC included; a signal
    with zero total energy yields normalized = 0.
    """
    if not 0 <= f_l < f_u:
        raise ParameterError(f"need 0 <= f_l < f_u, got [{f_l}, {f_u}]")
    j_lo, j_hi = band_bin_range(psd.df, len(psd.power), f_l, f_u)
    band = float(psd.power[j_lo : j_hi + 1].sum() * psd.df) if j_lo <= j_hi else 0.0
    total = psd.total_energy
    normalized = band / total if total > 0 else 0.0
    return BandEnergyFeature(
        f_l=f_l, f_u=f_u, band_energy=band, total_energy=total, normalized=normalized
    )


# ---------------------------------------------------------------------------
# spectrogram


def spectrogram(rate: RateSignal, window_len: int, hop: int) -> Spectrogram:
    """Sliding-window periodograms over the signal (rectangular window)."""
    n = len(rate)
    if window_len > n:
        raise ParameterError(f"window length {window_len} exceeds signal length {n}")
    if window_len < 2:
        raise ParameterError("window length must be at least 2 bins")
    if hop < 1:
        raise ParameterError("hop must be at least 1 bin")
    n_cols = (n - window_len) // hop + 1
    starts = np.arange(n_cols) * hop
    segments = rate.values[starts[:, None] + np.arange(window_len)[None, :]]
    power = _power_rows(segments, rate.bin_width_dt)
    df = 1.0 / (window_len * rate.bin_width_dt)
    columns = tuple(PsdEstimate(df=df, power=p, method=PERIODOGRAM) for p in power)
    times = rate.t0 * 1e-6 + (starts + window_len / 2.0) * rate.bin_width_dt
    return Spectrogram(window_len=window_len, hop=hop, columns=columns, column_times=times)


# ---------------------------------------------------------------------------
# exports


def write_psd_csv(psd: PsdEstimate, path):
    """Export as ``f_hz,power`` rows."""
    freqs = psd.frequencies
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("f_hz,power\n")
        for f, p in zip(freqs, psd.power):
            fh.write(f"{float(f)!r},{float(p)!r}\n")


def write_spectrogram_csv(spec: Spectrogram, path):
    """Long-format export as ``t_s,f_hz,power`` rows, one per (column, bin)."""
    freqs = spec.columns[0].frequencies
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t_s,f_hz,power\n")
        for t, col in zip(spec.column_times, spec.columns):
            for f, p in zip(freqs, col.power):
                fh.write(f"{float(t)!r},{float(f)!r},{float(p)!r}\n")
