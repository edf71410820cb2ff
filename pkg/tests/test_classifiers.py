import numpy as np
import pytest

from evosc.classifiers import (
    EnergyBandParams,
    EnergyParams,
    classify_energy,
    classify_energy_band,
)
from evosc.errors import ContractError, ValidationError
from evosc.events import BG, ED
from evosc.rate import RateSignal
from evosc.spectral import band_energy, periodogram


def sinusoid_rate(freq, n=500, dt=0.01, amplitude=1.0):
    values = amplitude * np.sin(2 * np.pi * freq * dt * np.arange(n))
    zeros = np.zeros(n, np.int64)
    return RateSignal(dt, 0, zeros, zeros, values - values.mean(), "zero_mean")


def band_feature(signal, params):
    return band_energy(periodogram(signal), params.f_l, params.f_u)


def test_energy_below_threshold_is_bg():
    assert classify_energy(0.0, EnergyParams(0.1)) == BG


def test_energy_at_threshold_is_bg():
    assert classify_energy(0.1, EnergyParams(0.1)) == BG


def test_energy_above_threshold_is_ed():
    assert classify_energy(0.2, EnergyParams(0.1)) == ED


def test_energy_separable_synthetic_set():
    # BG windows carry 10x fewer events than ED windows; a mid-gap threshold is perfect
    rng = np.random.default_rng(5)
    bg = rng.uniform(0.5, 1.0, 50)
    ed = rng.uniform(9.0, 11.0, 50)
    params = EnergyParams(threshold=4.0)
    preds = [classify_energy(v, params) for v in np.concatenate([bg, ed])]
    assert preds[:50] == [BG] * 50
    assert preds[50:] == [ED] * 50


def test_band_zero_feature_is_bg():
    params = EnergyBandParams(2.0, 0.4, 0.1)
    feature = band_feature(sinusoid_rate(2.0, amplitude=0.0), params)
    assert feature.normalized == 0.0
    assert classify_energy_band(feature, params) == BG


def test_band_2hz_sinusoid_is_ed():
    params = EnergyBandParams(2.0, 0.4, 0.2)
    feature = band_feature(sinusoid_rate(2.0), params)
    assert feature.normalized >= 0.95
    assert classify_energy_band(feature, params) == ED


def test_band_6hz_sinusoid_is_bg():
    params = EnergyBandParams(2.0, 0.4, 0.2)
    feature = band_feature(sinusoid_rate(6.0), params)
    assert feature.normalized <= 0.01
    assert classify_energy_band(feature, params) == BG


def test_band_mismatched_feature_raises():
    params = EnergyBandParams(2.0, 0.4, 0.2)
    other = EnergyBandParams(3.0, 0.4, 0.2)
    feature = band_feature(sinusoid_rate(2.0), other)
    with pytest.raises(ContractError):
        classify_energy_band(feature, params)


def test_band_decision_scale_invariant():
    params = EnergyBandParams(2.0, 0.5, 0.15)
    base = sinusoid_rate(2.0)
    f1 = band_feature(base, params)
    for c in (2.0, 0.125, 37.5):
        zeros = np.zeros(len(base.values), np.int64)
        scaled = RateSignal(base.bin_width_dt, 0, zeros, zeros, base.values * c, "zero_mean")
        f2 = band_feature(scaled, params)
        assert f2.normalized == pytest.approx(f1.normalized, rel=1e-12)
        assert classify_energy_band(f2, params) == classify_energy_band(f1, params)


def test_band_full_band_always_ed_for_nonzero():
    rng = np.random.default_rng(11)
    for _ in range(10):
        values = rng.normal(size=100)
        zeros = np.zeros(100, np.int64)
        signal = RateSignal(0.01, 0, zeros, zeros, values - values.mean(), "zero_mean")
        psd = periodogram(signal)
        nyq = (len(psd.power) - 1) * psd.df
        params = EnergyBandParams(nyq / 2, nyq, 0.99)
        feature = band_energy(psd, params.f_l, params.f_u)
        assert classify_energy_band(feature, params) == ED


def test_param_invariants():
    with pytest.raises(ValidationError):
        EnergyBandParams(0.1, 0.4, 0.1)  # f_l < 0
    with pytest.raises(ValidationError):
        EnergyBandParams(2.0, -0.1, 0.1)
    with pytest.raises(ValidationError):
        EnergyBandParams(2.0, 0.4, 1.0)
    with pytest.raises(ValidationError):
        EnergyParams(-0.5)
