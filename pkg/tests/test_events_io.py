import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evosc.errors import OrderingError, ParseError, RangeError, ValidationError
from evosc.events import (
    BG,
    ED,
    AnnotationTrack,
    Roi,
    crop_to_roi,
    generate_labels,
    load_annotations,
    merge_streams,
    parse_event_csv,
    parse_event_file,
    slice_window,
    to_us,
    window_centers,
    write_annotations,
    write_event_binary,
    write_event_csv,
)

from conftest import make_stream, random_events


# ---------------------------------------------------------------------------
# parsing


def test_parse_csv_three_lines(tmp_path):
    path = tmp_path / "ev.csv"
    path.write_text("t_us,x,y,p\n0,5,5,1\n100,5,6,0\n200,6,5,1\n")
    stream = parse_event_file(path, "csv")
    assert len(stream) == 3
    assert stream.p.tolist() == [1, -1, 1]
    assert stream.t.tolist() == [0, 100, 200]


def test_parse_csv_empty_file(tmp_path):
    path = tmp_path / "ev.csv"
    path.write_text("t_us,x,y,p\n")
    stream = parse_event_file(path, "csv")
    assert len(stream) == 0
    assert stream.t_begin == stream.t_end == 0


def test_parse_csv_regression_beyond_tolerance(tmp_path):
    # 99950 us of backwards jitter is far beyond the 1 ms reorder window
    path = tmp_path / "ev.csv"
    path.write_text("t_us,x,y,p\n100000,1,1,1\n50,1,1,1\n")
    with pytest.raises(OrderingError):
        parse_event_file(path, "csv")


def test_parse_csv_regression_within_tolerance_is_sorted(tmp_path):
    path = tmp_path / "ev.csv"
    path.write_text("t_us,x,y,p\n1500,1,1,1\n900,2,2,0\n")
    stream = parse_event_file(path, "csv")
    assert stream.t.tolist() == [900, 1500]
    assert stream.p.tolist() == [-1, 1]


def test_parse_csv_bad_polarity(tmp_path):
    path = tmp_path / "ev.csv"
    path.write_text("t_us,x,y,p\n0,1,1,2\n")
    with pytest.raises(ValidationError):
        parse_event_csv(path)


def test_parse_csv_mixed_polarity_encodings(tmp_path):
    path = tmp_path / "ev.csv"
    path.write_text("t_us,x,y,p\n0,1,1,-1\n10,1,1,0\n")
    with pytest.raises(ValidationError):
        parse_event_csv(path)


def test_parse_csv_malformed_line_number(tmp_path):
    path = tmp_path / "ev.csv"
    path.write_text("t_us,x,y,p\n0,1,1,1\n5,2,oops,1\n")
    with pytest.raises(ParseError) as err:
        parse_event_csv(path)
    assert err.value.line == 3


def test_parse_csv_wrong_header(tmp_path):
    path = tmp_path / "ev.csv"
    path.write_text("time,x,y,polarity\n")
    with pytest.raises(ParseError) as err:
        parse_event_csv(path)
    assert err.value.line == 1


def test_csv_round_trip(tmp_path, rng):
    stream = make_stream(random_events(rng, 200), sensor=(16, 16), span=(0, 2_000_000))
    path = tmp_path / "ev.csv"
    write_event_csv(stream, path)
    back = parse_event_csv(path, sensor_size=(16, 16), span=(0, 2_000_000))
    assert back == stream


def test_binary_round_trip(tmp_path, rng):
    stream = make_stream(random_events(rng, 500), sensor=(32, 24), span=(0, 2_000_000))
    path = tmp_path / "ev.evb"
    write_event_binary(stream, path)
    back = parse_event_file(path, "binary")
    assert back == stream


def test_binary_bad_magic(tmp_path):
    path = tmp_path / "ev.evb"
    path.write_bytes(b"NOPE" + b"\x00" * 40)
    with pytest.raises(ParseError):
        parse_event_file(path, "binary")


# ---------------------------------------------------------------------------
# crop / slice


def test_crop_identity():
    stream = make_stream([(0, 2, 2, 1), (10, 3, 3, -1)], sensor=(8, 8))
    roi = Roi("r", 0, 0, 8, 8)
    assert crop_to_roi(stream, roi) == stream


def test_crop_empty():
    stream = make_stream([(0, 2, 2, 1)], sensor=(8, 8))
    roi = Roi("r", 4, 4, 8, 8)
    assert len(crop_to_roi(stream, roi)) == 0


def test_crop_mixed_enumeration(rng):
    events = random_events(rng, 10, sensor=(10, 10))
    stream = make_stream(events, sensor=(10, 10))
    roi = Roi("r", 2, 3, 6, 8)
    cropped = crop_to_roi(stream, roi)
    expected = [e for e in sorted(events) if 2 <= e[1] < 6 and 3 <= e[2] < 8]
    assert cropped.t.tolist() == [e[0] for e in expected]
    assert cropped.x.tolist() == [e[1] for e in expected]


def test_crop_outside_sensor():
    stream = make_stream([(0, 2, 2, 1)], sensor=(8, 8))
    with pytest.raises(ValidationError):
        crop_to_roi(stream, Roi("r", 0, 0, 9, 8))


def test_slice_window_half_open():
    stream = make_stream(
        [(0, 1, 1, 1), (1_000_000, 1, 1, 1), (2_000_000, 1, 1, 1)], span=(0, 2_000_001)
    )
    win = slice_window(stream, 1_000_000, 2.0)
    assert win.t.tolist() == [0, 1_000_000]  # 2 s excluded by the half-open rule


def test_slice_window_full_span():
    stream = make_stream([(0, 1, 1, 1), (999_999, 1, 1, 1)], span=(0, 1_000_000))
    win = slice_window(stream, 500_000, 1.0)
    assert len(win) == 2


def test_slice_window_out_of_range():
    stream = make_stream([(0, 1, 1, 1)], span=(0, 1_000_000))
    with pytest.raises(RangeError):
        slice_window(stream, 100_000, 1.0)


def test_slice_window_enumeration_oracle(rng):
    events = random_events(rng, 3000, t_max=600_000_000)
    stream = make_stream(events, span=(0, 600_000_000))
    win = slice_window(stream, to_us(2.5), 5.0)
    expected = [t for t, _, _, _ in sorted(events) if 0 <= t < 5_000_000]
    assert win.t.tolist() == expected
    assert win.t_begin == 0 and win.t_end == 5_000_000


# ---------------------------------------------------------------------------
# labels


def test_labels_no_intervals_all_bg():
    track = AnnotationTrack("r", ())
    labels = generate_labels(track, (0, 10_000_000), stride=1.0, duration_d=2.0)
    assert labels and all(w.label == BG for w in labels)


def test_labels_center_at_interval_end_is_bg():
    track = AnnotationTrack("r", ((1_000_000, 3_000_000),))
    labels = generate_labels(track, (0, 10_000_000), stride=1.0, duration_d=2.0)
    by_center = {w.center: w.label for w in labels}
    assert by_center[3_000_000] == BG  # half-open upper edge
    assert by_center[1_000_000] == ED
    assert by_center[2_000_000] == ED


def test_labels_eight_second_interval_count_oracle():
    # 10-minute span, one 8 s interval, stride 33 ms, d = 5 s
    span = (0, to_us(600.0))
    iv = (to_us(200.0), to_us(208.0))
    track = AnnotationTrack("r", (iv,))
    labels = generate_labels(track, span, stride=0.033, duration_d=5.0)
    positives = sum(1 for w in labels if w.label == ED)
    # independent enumeration of every center
    stride_us, d_us = to_us(0.033), to_us(5.0)
    centers = range(span[0] + d_us // 2, span[1] - d_us // 2 + 1, stride_us)
    expected = sum(1 for c in centers if iv[0] <= c < iv[1])
    assert positives == expected
    assert positives in (242, 243)


def test_labels_count_vs_duration_bound(rng):
    stride, d = 0.05, 1.0
    for _ in range(20):
        n_iv = int(rng.integers(1, 5))
        edges = np.sort(rng.integers(0, to_us(120.0), 2 * n_iv))
        intervals = [
            (int(edges[2 * i]), int(edges[2 * i + 1]))
            for i in range(n_iv)
            if edges[2 * i] < edges[2 * i + 1]
        ]
        if not intervals:
            continue
        track = AnnotationTrack("r", tuple(intervals))
        labels = generate_labels(track, (0, to_us(120.0)), stride, d)
        n_ed = sum(1 for w in labels if w.label == ED)
        total = sum(b - a for a, b in intervals) * 1e-6
        slack = (len(intervals) + 1) * stride
        assert abs(n_ed * stride - total) <= slack + 1e-9


def test_window_centers_empty_span():
    assert window_centers((0, to_us(1.0)), 0.033, 5.0).size == 0


def test_class_imbalance_arithmetic():
    fraction = 10364 / 427997
    assert abs(fraction - 0.0242) <= 1e-4


# ---------------------------------------------------------------------------
# properties


@settings(max_examples=50, deadline=None)
@given(
    seed=st.integers(0, 10_000),
    x0=st.integers(0, 8),
    y0=st.integers(0, 8),
    center_s=st.floats(1.0, 9.0),
    d=st.sampled_from([0.5, 1.0, 2.0]),
)
def test_crop_slice_commute(seed, x0, y0, center_s, d):
    gen = np.random.default_rng(seed)
    stream = make_stream(random_events(gen, 64, t_max=10_000_000), span=(0, 10_000_000))
    roi = Roi("r", x0, y0, x0 + 4, y0 + 4)
    center = to_us(center_s)
    a = slice_window(crop_to_roi(stream, roi), center, d)
    b = crop_to_roi(slice_window(stream, center, d), roi)
    assert a == b


def test_merge_streams_sorted_and_stable(rng):
    a = make_stream(random_events(rng, 50), span=(0, 1_000_000))
    b = make_stream(random_events(rng, 50), span=(0, 1_000_000))
    merged = merge_streams(a, b)
    assert len(merged) == 100
    assert np.all(np.diff(merged.t) >= 0)


# ---------------------------------------------------------------------------
# annotations


def test_annotations_round_trip(tmp_path):
    rois = [Roi("N01", 0, 0, 8, 8), Roi("N02", 8, 0, 16, 8)]
    tracks = {"N01": AnnotationTrack("N01", ((100, 200), (400, 600)))}
    path = tmp_path / "ann.json"
    write_annotations(path, (16, 8), rois, tracks)
    sensor, rois2, tracks2 = load_annotations(path)
    assert sensor == (16, 8)
    assert rois2 == rois
    assert tracks2["N01"].intervals == ((100, 200), (400, 600))


def test_annotations_unknown_track_roi(tmp_path):
    path = tmp_path / "ann.json"
    path.write_text(
        '{"sensor": {"width": 8, "height": 8}, "rois": [], '
        '"tracks": [{"roi_id": "X", "intervals": [[0, 10]]}]}'
    )
    with pytest.raises(ValidationError):
        load_annotations(path)


def test_track_invariants():
    with pytest.raises(ValidationError):
        AnnotationTrack("r", ((10, 5),))
    with pytest.raises(ValidationError):
        AnnotationTrack("r", ((0, 10), (5, 20)))
