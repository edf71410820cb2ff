"""Batched extraction of labeled per-window features from an event stream.

For every ROI the stream is cropped once, windows are placed on the stride
grid, and each window is binned and transformed. The result is a
:class:`WindowTable` holding one PSD row per window plus whatever raw
representations (spectra, rates) the caller asked to keep. The batched path
computes exactly what chaining the single-window operations would, just
without materializing per-window objects.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .errors import ContractError, ParameterError
from .events import BG, ED, crop_to_roi, to_us, window_centers
from .rate import RATE_KINDS, SIGNED, UNSIGNED, ZERO_MEAN, n_bins_for
from .spectral import (
    HANN,
    PERIODOGRAM,
    WELCH,
    PsdEstimate,
    _power_rows,
    _welch_rows,
    band_energy,
)
from .classifiers import classify_energy, classify_energy_band
from .nets import RATE, SPECTRUM


@dataclass(frozen=True)
class WindowTable:
    """Per-window features: one row per (roi, center) pair."""

    window_d: float
    bin_width_dt: float
    rate_kind: str
    psd_method: str
    df: float
    roi_ids: tuple  # str per row
    centers: np.ndarray  # int64 us per row
    labels: np.ndarray  # bool per row, True = ED
    power: np.ndarray  # (rows, psd_bins)
    totals: np.ndarray  # (rows,) total energy = sum(power) * df
    spectra: np.ndarray | None = None  # (rows, n//2+1) transform magnitudes
    rates: np.ndarray | None = None  # (rows, n_bins) rate values

    def __len__(self):
        return len(self.centers)

    @property
    def unique_rois(self) -> tuple:
        seen = []
        for rid in self.roi_ids:
            if rid not in seen:
                seen.append(rid)
        return tuple(seen)

    def roi_mask(self, roi_id) -> np.ndarray:
        return np.array([rid == roi_id for rid in self.roi_ids])

    def psd_row(self, i) -> PsdEstimate:
        return PsdEstimate(df=self.df, power=self.power[i], method=self.psd_method)

    def subset(self, mask) -> "WindowTable":
        mask = np.asarray(mask)
        idx = np.flatnonzero(mask) if mask.dtype == bool else mask
        return replace(
            self,
            roi_ids=tuple(self.roi_ids[i] for i in idx),
            centers=self.centers[idx],
            labels=self.labels[idx],
            power=self.power[idx],
            totals=self.totals[idx],
            spectra=None if self.spectra is None else self.spectra[idx],
            rates=None if self.rates is None else self.rates[idx],
        )


def _rate_values(on: np.ndarray, off: np.ndarray, kind: str) -> np.ndarray:
    if kind == SIGNED:
        return (on - off).astype(np.float64)
    if kind == UNSIGNED:
        return (on + off).astype(np.float64)
    if kind == ZERO_MEAN:
        unsigned = (on + off).astype(np.float64)
        return unsigned - unsigned.mean(axis=1, keepdims=True)
    raise ParameterError(f"unknown rate kind {kind!r}")


def build_window_table(
    stream,
    rois,
    tracks,
    *,
    window_d: float = 5.0,
    bin_width_dt: float = 0.01,
    stride: float = 0.033,
    rate_kind: str = SIGNED,
    psd_method: str = PERIODOGRAM,
    welch_segment_len: int | None = None,
    welch_overlap: float = 0.5,
    welch_window: str = HANN,
    keep_spectra: bool = False,
    keep_rates: bool = False,
) -> WindowTable:
    """Window, bin, and transform a stream for every ROI.

    ROIs without a track are treated as all-background. The zero-mean rate
    kind is the mean-subtracted unsigned rate.
    """
    if rate_kind not in RATE_KINDS:
        raise ParameterError(f"unknown rate kind {rate_kind!r}")
    n_bins = n_bins_for(window_d, bin_width_dt)
    dt_us = to_us(bin_width_dt)
    d_us = to_us(window_d)
    if d_us != n_bins * dt_us:
        raise ParameterError("window duration must be a whole number of bins")
    centers = window_centers((stream.t_begin, stream.t_end), stride, window_d)
    if psd_method == WELCH and welch_segment_len is None:
        welch_segment_len = max(2, n_bins // 4)

    roi_ids: list = []
    all_centers = []
    all_labels = []
    power_blocks = []
    spectra_blocks = []
    rate_blocks = []
    for roi in rois:
        cropped = crop_to_roi(stream, roi)
        track = tracks.get(roi.id) if tracks else None
        if track is not None and track.intervals:
            starts_iv = np.array([a for a, _ in track.intervals], dtype=np.int64)
            ends_iv = np.array([b for _, b in track.intervals], dtype=np.int64)
            idx = np.searchsorted(starts_iv, centers, side="right") - 1
            labels = (idx >= 0) & (centers < ends_iv[np.clip(idx, 0, len(ends_iv) - 1)])
        else:
            labels = np.zeros(len(centers), dtype=bool)
        window_starts = centers - d_us // 2
        on, off = _kernels.window_counts(cropped.t, cropped.p, window_starts, dt_us, n_bins)
        values = _rate_values(on, off, rate_kind)
        if psd_method == PERIODOGRAM:
            power = _power_rows(values, bin_width_dt)
            df = 1.0 / (n_bins * bin_width_dt)
        elif psd_method == WELCH:
            power = _welch_rows(values, bin_width_dt, welch_segment_len, welch_overlap, welch_window)
            df = 1.0 / (welch_segment_len * bin_width_dt)
        else:
            raise ParameterError(f"unknown psd method {psd_method!r}")
        roi_ids.extend([roi.id] * len(centers))
        all_centers.append(centers)
        all_labels.append(labels)
        power_blocks.append(power)
        if keep_spectra:
            spectra_blocks.append(np.abs(np.fft.rfft(values, axis=-1)))
        if keep_rates:
            rate_blocks.append(values)

    if not roi_ids:
        raise ParameterError("no ROI produced any window")
    power = np.concatenate(power_blocks) if power_blocks else np.empty((0, 0))
    return WindowTable(
        window_d=window_d,
        bin_width_dt=bin_width_dt,
        rate_kind=rate_kind,
        psd_method=psd_method,
        df=df,
        roi_ids=tuple(roi_ids),
        centers=np.concatenate(all_centers),
        labels=np.concatenate(all_labels),
        power=power,
        totals=power.sum(axis=1) * df,
        spectra=np.concatenate(spectra_blocks) if spectra_blocks else None,
        rates=np.concatenate(rate_blocks) if rate_blocks else None,
    )


def split_train_test(table: WindowTable, train_frac: float):
    """Per-ROI chronological split: the first ``train_frac`` of windows train."""
    if not 0.0 < train_frac < 1.0:
        raise ParameterError("train fraction must lie strictly between 0 and 1")
    train_mask = np.zeros(len(table), dtype=bool)
    for roi_id in table.unique_rois:
        rows = np.flatnonzero(table.roi_mask(roi_id))
        order = rows[np.argsort(table.centers[rows], kind="stable")]
        n_train = int(np.floor(train_frac * len(order)))
        train_mask[order[:n_train]] = True
    return table.subset(train_mask), table.subset(~train_mask)


# ---------------------------------------------------------------------------
# applying classifiers to a table


def predict_energy_band(table: WindowTable, params_by_roi: dict) -> list:
    """Band-classifier predictions per row; ``params_by_roi`` maps roi id -> params.

    A single-parameter-set (global) classifier is the special case where all
    ROIs map to the same object.
    """
    preds = []
    for i, roi_id in enumerate(table.roi_ids):
        params = params_by_roi.get(roi_id)
        if params is None:
            raise ContractError(f"no band parameters for roi {roi_id!r}")
        feature = band_energy(table.psd_row(i), params.f_l, params.f_u)
        preds.append(classify_energy_band(feature, params))
    return preds


def predict_energy(table: WindowTable, params) -> list:
    return [classify_energy(float(t), params) for t in table.totals]


def net_inputs(table: WindowTable, input_kind: str) -> np.ndarray:
    """Peak-normalized per-row inputs for the tiny nets."""
    if input_kind == SPECTRUM:
        if table.spectra is None:
            raise ContractError("table was built without keep_spectra=True")
        raw = table.spectra
    elif input_kind == RATE:
        if table.rates is None:
            raise ContractError("table was built without keep_rates=True")
        raw = table.rates
    else:
        raise ParameterError(f"unknown input kind {input_kind!r}")
    peaks = np.max(np.abs(raw), axis=1, keepdims=True)
    out = np.divide(raw, peaks, out=np.zeros_like(raw, dtype=np.float64), where=peaks > 0)
    return out


def predict_net(net, table: WindowTable, chunk: int = 2048) -> list:
    """Argmax predictions of a tiny net over all table rows."""
    x = net_inputs(table, net.input_kind)
    preds = []
    for start in range(0, len(x), chunk):
        logits = net.forward_batch(x[start : start + chunk])
        preds.extend(ED if e > b else BG for b, e in logits)
    return preds


def table_labels(table: WindowTable) -> list:
    return [ED if flag else BG for flag in table.labels]
