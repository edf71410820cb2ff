import numpy as np
import pytest

from evosc.errors import ParameterError, RangeError
from evosc.rate import (
    SIGNED,
    UNSIGNED,
    ZERO_MEAN,
    bin_events,
    n_bins_for,
    to_unsigned,
    to_zero_mean,
    write_rate_csv,
)

from conftest import make_stream, random_events


def test_bin_empty_stream():
    stream = make_stream([], span=(0, 5_000_000))
    signal = bin_events(stream, 0.01, 500)
    assert len(signal) == 500
    assert not signal.values.any()
    assert signal.kind == SIGNED


def test_bin_small_example():
    stream = make_stream(
        [(1000, 0, 0, 1), (2000, 0, 0, 1), (15_000, 0, 0, -1)], span=(0, 20_000)
    )
    signal = bin_events(stream, 0.01, 2)
    assert signal.r_on.tolist() == [2, 0]
    assert signal.r_off.tolist() == [0, 1]
    assert signal.values.tolist() == [2.0, -1.0]


def test_bin_boundary_goes_to_later_bin():
    stream = make_stream([(10_000, 0, 0, 1)], span=(0, 20_000))
    signal = bin_events(stream, 0.01, 2)
    assert signal.r_on.tolist() == [0, 1]


def test_bin_random_events_against_loop_oracle(rng):
    events = random_events(rng, 10_000, t_max=5_000_000)
    stream = make_stream(events, span=(0, 5_000_000))
    signal = bin_events(stream, 0.01, 500)
    on = np.zeros(500, np.int64)
    off = np.zeros(500, np.int64)
    for t, _, _, p in events:
        k = t // 10_000
        if p > 0:
            on[k] += 1
        else:
            off[k] += 1
    assert np.array_equal(signal.r_on, on)
    assert np.array_equal(signal.r_off, off)
    assert np.array_equal(signal.values, (on - off).astype(float))


def test_bin_event_outside_span_raises():
    stream = make_stream([(30_000, 0, 0, 1)], span=(0, 40_000))
    with pytest.raises(RangeError):
        bin_events(stream, 0.01, 2)


def test_bin_rejects_bad_params():
    stream = make_stream([], span=(0, 0))
    with pytest.raises(ParameterError):
        bin_events(stream, 0.0, 10)
    with pytest.raises(ParameterError):
        bin_events(stream, 0.01, 0)


def test_conservation(rng):
    events = random_events(rng, 777, t_max=1_000_000)
    stream = make_stream(events, span=(0, 1_000_000))
    signal = bin_events(stream, 0.001, 1000)
    assert int(signal.r_on.sum() + signal.r_off.sum()) == len(events)


def test_refinement_halving(rng):
    events = random_events(rng, 2000, t_max=1_000_000)
    stream = make_stream(events, span=(0, 1_000_000))
    coarse = bin_events(stream, 0.01, 100)
    fine = bin_events(stream, 0.005, 200)
    assert np.array_equal(fine.r_on.reshape(-1, 2).sum(axis=1), coarse.r_on)
    assert np.array_equal(fine.r_off.reshape(-1, 2).sum(axis=1), coarse.r_off)


def test_default_window_is_500_bins():
    assert n_bins_for(5.0, 0.01) == 500


def test_n_bins_rejects_partial_bin():
    with pytest.raises(ParameterError):
        n_bins_for(5.003, 0.01)


def test_to_unsigned():
    stream = make_stream(
        [(1000, 0, 0, 1), (2000, 0, 0, 1), (15_000, 0, 0, -1)], span=(0, 20_000)
    )
    unsigned = to_unsigned(bin_events(stream, 0.01, 2))
    assert unsigned.values.tolist() == [2.0, 1.0]
    assert unsigned.kind == UNSIGNED


def test_to_unsigned_zero():
    stream = make_stream([], span=(0, 20_000))
    unsigned = to_unsigned(bin_events(stream, 0.01, 2))
    assert not unsigned.values.any()


def test_signed_bounded_by_unsigned(rng):
    for _ in range(10):
        events = random_events(rng, 300, t_max=100_000)
        stream = make_stream(events, span=(0, 100_000))
        signed = bin_events(stream, 0.01, 10)
        unsigned = to_unsigned(signed)
        assert np.all(np.abs(signed.values) <= unsigned.values)


def test_to_zero_mean_constant():
    stream = make_stream(
        [(i * 10_000 + 5, 0, 0, 1) for i in range(4)], span=(0, 40_000)
    )
    zm = to_zero_mean(bin_events(stream, 0.01, 4))
    assert zm.values.tolist() == [0.0, 0.0, 0.0, 0.0]
    assert zm.kind == ZERO_MEAN


def test_to_zero_mean_small_example():
    stream = make_stream(
        [(1000, 0, 0, 1), (2000, 0, 0, 1), (15_000, 0, 0, -1)], span=(0, 20_000)
    )
    zm = to_zero_mean(bin_events(stream, 0.01, 2))
    # mean of [2, -1] is 0.5, so the centered signal is [1.5, -1.5]
    assert zm.values.tolist() == [1.5, -1.5]


def test_to_zero_mean_random_mean_is_zero(rng):
    events = random_events(rng, 5000, t_max=1_000_000)
    stream = make_stream(events, span=(0, 1_000_000))
    zm = to_zero_mean(to_unsigned(bin_events(stream, 0.01, 100)))
    assert abs(float(np.mean(zm.values))) <= 1e-9


def test_rate_csv_export(tmp_path, rng):
    events = random_events(rng, 100, t_max=100_000)
    stream = make_stream(events, span=(0, 100_000))
    signal = bin_events(stream, 0.01, 10)
    path = tmp_path / "rate.csv"
    write_rate_csv(signal, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "k,t_center_s,r_on,r_off,value"
    assert len(lines) == 11
    k, t_c, on, off, val = lines[1].split(",")
    assert int(k) == 0 and float(t_c) == 0.005
    assert int(on) == signal.r_on[0] and float(val) == signal.values[0]
