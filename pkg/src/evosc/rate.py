"""Binned event-rate signals: the 1-D summary a window of events reduces to.

The signed rate is the per-bin ON count minus the OFF count; the unsigned
rate is their sum; the zero-mean variant subtracts the signal mean. Counts
are kept as exact integers and only converted to floats in ``values``.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ParameterError, RangeError, ValidationError
from .events import EventStream, to_us

SIGNED = "signed"
UNSIGNED = "unsigned"
ZERO_MEAN = "zero_mean"
RATE_KINDS = (SIGNED, UNSIGNED, ZERO_MEAN)


@dataclass(frozen=True)
class RateSignal:
    bin_width_dt: float  # seconds
    t0: int  # us, start of the first bin
    r_on: np.ndarray  # int64 counts per bin
    r_off: np.ndarray
    values: np.ndarray  # float64, depends on kind
    kind: str

    def __post_init__(self):
        if self.kind not in RATE_KINDS:
            raise ValidationError(f"unknown rate kind {self.kind!r}")
        if not (len(self.r_on) == len(self.r_off) == len(self.values)):
            raise ValidationError("r_on, r_off and values must have equal length")
        if np.any(self.r_on < 0) or np.any(self.r_off < 0):
            raise ValidationError("counts must be non-negative")
        if self.kind == SIGNED and not np.array_equal(self.values, self.r_on - self.r_off):
            raise ValidationError("signed values must equal r_on - r_off")
        if self.kind == UNSIGNED and not np.array_equal(self.values, self.r_on + self.r_off):
            raise ValidationError("unsigned values must equal r_on + r_off")
        if self.kind == ZERO_MEAN and len(self.values) and abs(self.values.mean()) > 1e-9:
            raise ValidationError("zero-mean values must average to 0")
        for arr in (self.r_on, self.r_off, self.values):
            arr.setflags(write=False)

    def __len__(self):
        return len(self.values)

    @property
    def duration(self) -> float:
        return len(self) * self.bin_width_dt

    def bin_centers_s(self) -> np.ndarray:
        return self.t0 * 1e-6 + (np.arange(len(self)) + 0.5) * self.bin_width_dt


def n_bins_for(duration_d: float, bin_width_dt: float) -> int:
    """Bin count for a window; the duration must be a whole number of bins."""
    n = round(duration_d / bin_width_dt)
    if n < 1 or abs(n * bin_width_dt - duration_d) > 1e-9 * max(1.0, duration_d):
        raise ParameterError(
            f"window duration {duration_d}s is not a multiple of the bin width {bin_width_dt}s"
        )
    return n


def bin_events(stream: EventStream, bin_width_dt: float, n_bins: int) -> RateSignal:
    """Count events into ``n_bins`` bins of ``bin_width_dt`` seconds from t_begin.

    An event at timestamp t lands in bin floor((t - t0) / dt); events on a
    bin boundary go to the later bin. Every event must fall inside the
    binned span.
    """
    if bin_width_dt <= 0:
        raise ParameterError("bin width must be positive")
    if n_bins < 1:
        raise ParameterError("need at least one bin")
    dt_us = to_us(bin_width_dt)
    if dt_us < 1:
        raise ParameterError(f"bin width {bin_width_dt}s is below 1 us resolution")
    t0 = stream.t_begin
    if len(stream) and int(stream.t[-1]) >= t0 + dt_us * n_bins:
        raise RangeError(
            f"event at {int(stream.t[-1])} us outside the binned span "
            f"[{t0}, {t0 + dt_us * n_bins}) us"
        )
    r_on, r_off = _kernels.bin_counts(stream.t - t0, stream.p, dt_us, n_bins)
    return RateSignal(
        bin_width_dt=bin_width_dt, t0=t0, r_on=r_on, r_off=r_off,
        values=(r_on - r_off).astype(np.float64), kind=SIGNED,
    )


def to_unsigned(rate: RateSignal) -> RateSignal:
    """Polarity-blind variant: values = r_on + r_off."""
    return RateSignal(
        bin_width_dt=rate.bin_width_dt, t0=rate.t0, r_on=rate.r_on, r_off=rate.r_off,
        values=(rate.r_on + rate.r_off).astype(np.float64), kind=UNSIGNED,
    )


def to_zero_mean(rate: RateSignal) -> RateSignal:
    """Subtract the mean of the values (removes the DC component)."""
    if len(rate) < 1:
        raise ParameterError("cannot zero-mean an empty signal")
    values = rate.values - rate.values.mean()
    return RateSignal(
        bin_width_dt=rate.bin_width_dt, t0=rate.t0, r_on=rate.r_on, r_off=rate.r_off,
        values=values, kind=ZERO_MEAN,
    )


def write_rate_csv(rate: RateSignal, path):
    """Export as ``k,t_center_s,r_on,r_off,value`` rows."""
    centers = rate.bin_centers_s()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("k,t_center_s,r_on,r_off,value\n")
        for k in range(len(rate)):
            fh.write(
                f"{k},{float(centers[k])!r},{int(rate.r_on[k])},{int(rate.r_off[k])},"
                f"{float(rate.values[k])!r}\n"
            )
