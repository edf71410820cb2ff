"""Event streams, ROIs, interval annotations, and window labeling.

Timestamps are integer microseconds throughout; durations at the API surface
are seconds. All time intervals are half-open, [a, b), so window tilings
partition time exactly.
"""

import json
import struct
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ContractError, OrderingError, ParseError, RangeError, ValidationError

ED = "ED"  # positive class: oscillatory action present
BG = "BG"  # negative class: background

CSV_HEADER = "t_us,x,y,p"
BINARY_MAGIC = b"EVB1"
_BINARY_HEADER = struct.Struct("<4sHHqqQ")

# transmission jitter; larger regressions are treated as corrupt input
REORDER_TOLERANCE_US = 1000


def to_us(seconds: float) -> int:
    """Convert a duration in seconds to integer microseconds."""
    return int(round(seconds * 1e6))


class Event(NamedTuple):
    t: int
    x: int
    y: int
    polarity: int


class EventStream:
    """An immutable, time-sorted sequence of events on a pixel grid.

    Events are stored columnar (``t``, ``x``, ``y``, ``p`` arrays) with
    polarity always in {+1, -1}. Every event satisfies
    ``t_begin <= t < t_end`` and lies inside the sensor.
    """

    __slots__ = ("t", "x", "y", "p", "sensor_width", "sensor_height", "t_begin", "t_end")

    def __init__(self, t, x, y, p, sensor_width, sensor_height, t_begin, t_end):
        t = np.asarray(t, dtype=np.int64)
        x = np.asarray(x, dtype=np.int32)
        y = np.asarray(y, dtype=np.int32)
        p = np.asarray(p, dtype=np.int8)
        if not (t.shape == x.shape == y.shape == p.shape) or t.ndim != 1:
            raise ValidationError("event columns must be 1-D and equally long")
        if t_begin > t_end:
            raise ValidationError(f"t_begin {t_begin} exceeds t_end {t_end}")
        if t.size:
            if np.any(np.diff(t) < 0):
                raise ValidationError("events must be sorted by timestamp")
            if t[0] < t_begin or t[-1] >= t_end:
                raise RangeError(
                    f"event timestamps [{t[0]}, {t[-1]}] outside span [{t_begin}, {t_end})"
                )
            if np.any((x < 0) | (x >= sensor_width) | (y < 0) | (y >= sensor_height)):
                raise ValidationError("event coordinates outside the sensor")
            if np.any((p != 1) & (p != -1)):
                raise ValidationError("polarity must be +1 or -1")
        for arr in (t, x, y, p):
            arr.setflags(write=False)
        self.t = t
        self.x = x
        self.y = y
        self.p = p
        self.sensor_width = int(sensor_width)
        self.sensor_height = int(sensor_height)
        self.t_begin = int(t_begin)
        self.t_end = int(t_end)

    def __len__(self):
        return self.t.size

    def __getitem__(self, i) -> Event:
        return Event(int(self.t[i]), int(self.x[i]), int(self.y[i]), int(self.p[i]))

    def __eq__(self, other):
        if not isinstance(other, EventStream):
            return NotImplemented
        return (
            self.sensor_width == other.sensor_width
            and self.sensor_height == other.sensor_height
            and self.t_begin == other.t_begin
            and self.t_end == other.t_end
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.p, other.p)
        )

    def __repr__(self):
        return (
            f"EventStream({len(self)} events, {self.sensor_width}x{self.sensor_height}, "
            f"[{self.t_begin}, {self.t_end}) us)"
        )


@dataclass(frozen=True)
class Roi:
    """Axis-aligned pixel box; x/y_max are exclusive."""

    id: str
    x_min: int
    y_min: int
    x_max: int
    y_max: int

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValidationError(f"roi {self.id!r}: empty or inverted bounds")
        if self.x_min < 0 or self.y_min < 0:
            raise ValidationError(f"roi {self.id!r}: negative bounds")

    def validate_for(self, sensor_width: int, sensor_height: int):
        if self.x_max > sensor_width or self.y_max > sensor_height:
            raise ValidationError(
                f"roi {self.id!r} exceeds sensor {sensor_width}x{sensor_height}"
            )


@dataclass(frozen=True)
class AnnotationTrack:
    """Sorted, non-overlapping [t_start, t_end) intervals for one ROI, in us."""

    roi_id: str
    intervals: tuple

    def __post_init__(self):
        ivs = tuple((int(a), int(b)) for a, b in self.intervals)
        object.__setattr__(self, "intervals", ivs)
        prev_end = None
        for a, b in ivs:
            if a >= b:
                raise ValidationError(f"track {self.roi_id!r}: interval [{a}, {b}) is empty")
            if prev_end is not None and a < prev_end:
                raise ValidationError(f"track {self.roi_id!r}: intervals overlap or are unsorted")
            prev_end = b

    def covers(self, t_us: int) -> bool:
        for a, b in self.intervals:
            if a <= t_us < b:
                return True
        return False


@dataclass(frozen=True)
class LabeledWindow:
    roi_id: str
    center: int  # us
    duration_d: float  # seconds
    label: str  # ED or BG


# ---------------------------------------------------------------------------
# parsing and serialization


def _decode_polarity(raw, line_offset=2):
    vals = np.unique(raw)
    if vals.size == 0:
        return raw.astype(np.int8)
    allowed_pm = np.isin(vals, (-1, 1)).all()
    allowed_01 = np.isin(vals, (0, 1)).all()
    if allowed_pm and not np.any(vals == -1):
        # only ones present: both encodings agree
        return raw.astype(np.int8)
    if allowed_pm:
        return raw.astype(np.int8)
    if allowed_01:
        return np.where(raw == 0, -1, 1).astype(np.int8)
    bad = [v for v in vals.tolist() if v not in (-1, 0, 1)]
    if bad:
        raise ValidationError(f"polarity values {bad} are not a {{0,1}} or {{-1,1}} encoding")
    raise ValidationError("polarity mixes the {0,1} and {-1,1} encodings")


def _sort_with_tolerance(t, cols):
    """Stable-sort columns by t if regressions stay within the reorder tolerance."""
    if t.size == 0:
        return t, cols
    run_max = np.maximum.accumulate(t)
    regression = int((run_max - t).max())
    if regression == 0:
        return t, cols
    if regression > REORDER_TOLERANCE_US:
        pos = int(np.argmax((run_max - t) > REORDER_TOLERANCE_US))
        raise OrderingError(
            f"timestamp regression of {regression} us exceeds the "
            f"{REORDER_TOLERANCE_US} us reorder tolerance",
            line=pos + 2,
        )
    order = np.argsort(t, kind="stable")
    return t[order], [c[order] for c in cols]


def _finalize_stream(t, x, y, p, sensor_size, span):
    if sensor_size is None:
        if t.size:
            sensor_size = (int(x.max()) + 1, int(y.max()) + 1)
        else:
            sensor_size = (0, 0)
    if span is None:
        span = (0, int(t[-1]) + 1) if t.size else (0, 0)
    return EventStream(t, x, y, p, sensor_size[0], sensor_size[1], span[0], span[1])


def parse_event_csv(path, sensor_size=None, span=None) -> EventStream:
    """Parse the ``t_us,x,y,p`` CSV format.

    Without explicit ``sensor_size``/``span`` the geometry is inferred from
    the data (tight sensor, span [0, last_t + 1)). Rows may be out of order
    by at most the reorder tolerance and are then stably sorted.
    """
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if header.strip() != CSV_HEADER:
            raise ParseError(f"expected header {CSV_HEADER!r}, got {header.strip()!r}", line=1)
        body = fh.read()
    lines = [ln for ln in body.splitlines() if ln.strip()]
    if not lines:
        return _finalize_stream(
            np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0, np.int64),
            np.empty(0, np.int64), sensor_size, span,
        )
    try:
        data = np.array([ln.split(",") for ln in lines], dtype=np.int64)
        if data.shape[1] != 4:
            raise ValueError("wrong field count")
    except ValueError:
        for i, ln in enumerate(lines):
            fields = ln.split(",")
            if len(fields) != 4:
                raise ParseError(f"expected 4 fields, got {len(fields)}", line=i + 2) from None
            try:
                [int(f) for f in fields]
            except ValueError:
                raise ParseError(f"non-integer field in {ln!r}", line=i + 2) from None
        raise ParseError("malformed CSV body")  # pragma: no cover - located above
    t, x, y, p_raw = data.T
    p = _decode_polarity(p_raw)
    t, (x, y, p) = _sort_with_tolerance(t, [x, y, p])
    return _finalize_stream(t, x, y, p, sensor_size, span)


def write_event_csv(stream: EventStream, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        cols = np.column_stack([stream.t, stream.x, stream.y, stream.p.astype(np.int64)])
        np.savetxt(fh, cols, fmt="%d", delimiter=",")


def parse_event_binary(path) -> EventStream:
    """Parse the compact columnar binary format (magic ``EVB1``)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _BINARY_HEADER.size:
        raise ParseError("file too short for an EVB1 header")
    magic, width, height, t_begin, t_end, count = _BINARY_HEADER.unpack_from(blob, 0)
    if magic != BINARY_MAGIC:
        raise ParseError(f"bad magic {magic!r}, expected {BINARY_MAGIC!r}")
    off = _BINARY_HEADER.size
    expected = off + count * (8 + 2 + 2 + 1)
    if len(blob) != expected:
        raise ParseError(f"expected {expected} bytes for {count} events, got {len(blob)}")
    t = np.frombuffer(blob, np.int64, count, off)
    off += 8 * count
    x = np.frombuffer(blob, np.uint16, count, off).astype(np.int64)
    off += 2 * count
    y = np.frombuffer(blob, np.uint16, count, off).astype(np.int64)
    off += 2 * count
    p = np.frombuffer(blob, np.int8, count, off).astype(np.int64)
    p = _decode_polarity(p)
    t, (x, y, p) = _sort_with_tolerance(t.copy(), [x, y, p])
    return EventStream(t, x, y, p, width, height, t_begin, t_end)


def write_event_binary(stream: EventStream, path):
    header = _BINARY_HEADER.pack(
        BINARY_MAGIC, stream.sensor_width, stream.sensor_height,
        stream.t_begin, stream.t_end, len(stream),
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(stream.t.astype("<i8").tobytes())
        fh.write(stream.x.astype("<u2").tobytes())
        fh.write(stream.y.astype("<u2").tobytes())
        fh.write(stream.p.astype("i1").tobytes())


def parse_event_file(path, format="csv", *, sensor_size=None, span=None) -> EventStream:
    """Parse an event file; ``format`` is 'csv' or 'binary'."""
    if format == "csv":
        return parse_event_csv(path, sensor_size=sensor_size, span=span)
    if format == "binary":
        return parse_event_binary(path)
    raise ValidationError(f"unknown event file format {format!r}")


# ---------------------------------------------------------------------------
# stream operations


def crop_to_roi(stream: EventStream, roi: Roi) -> EventStream:
    """Restrict a stream to the events inside ``roi`` (order preserved)."""
    roi.validate_for(stream.sensor_width, stream.sensor_height)
    m = (
        (stream.x >= roi.x_min)
        & (stream.x < roi.x_max)
        & (stream.y >= roi.y_min)
        & (stream.y < roi.y_max)
    )
    return EventStream(
        stream.t[m], stream.x[m], stream.y[m], stream.p[m],
        stream.sensor_width, stream.sensor_height, stream.t_begin, stream.t_end,
    )


def slice_span(stream: EventStream, t_lo: int, t_hi: int) -> EventStream:
    """Events with t_lo <= t < t_hi; the result's span is exactly [t_lo, t_hi)."""
    if t_lo < stream.t_begin or t_hi > stream.t_end:
        raise RangeError(
            f"slice [{t_lo}, {t_hi}) outside stream span [{stream.t_begin}, {stream.t_end})"
        )
    lo = np.searchsorted(stream.t, t_lo, side="left")
    hi = np.searchsorted(stream.t, t_hi, side="left")
    return EventStream(
        stream.t[lo:hi], stream.x[lo:hi], stream.y[lo:hi], stream.p[lo:hi],
        stream.sensor_width, stream.sensor_height, t_lo, t_hi,
    )


def window_bounds(center: int, duration_d: float):
    """Half-open [lo, hi) bounds of the window of ``duration_d`` s at ``center`` us."""
    d_us = to_us(duration_d)
    lo = center - d_us // 2
    return lo, lo + d_us


def slice_window(stream: EventStream, center: int, duration_d: float) -> EventStream:
    """The events in the window of ``duration_d`` seconds centered at ``center``."""
    lo, hi = window_bounds(center, duration_d)
    return slice_span(stream, lo, hi)


def window_centers(stream_span, stride: float, duration_d: float) -> np.ndarray:
    """All window centers that fit in the span: t_begin + d/2, + stride, ..."""
    t_begin, t_end = stream_span
    if stride <= 0 or duration_d <= 0:
        raise ValidationError("stride and duration must be positive")
    d_us = to_us(duration_d)
    stride_us = to_us(stride)
    first = t_begin + d_us // 2
    tail = d_us - d_us // 2  # distance from center to window end
    last = t_end - tail
    if last < first:
        return np.empty(0, np.int64)
    n = (last - first) // stride_us + 1
    return first + stride_us * np.arange(n, dtype=np.int64)


def generate_labels(track, stream_span, stride: float, duration_d: float):
    """One LabeledWindow per center over the span; ED iff the center lies in an interval.

    A window overlapping an interval but centered outside it is BG; interval
    membership is half-open, so a center exactly at an interval's end is BG.
    """
    centers = window_centers(stream_span, stride, duration_d)
    intervals = track.intervals if track is not None else ()
    roi_id = track.roi_id if track is not None else ""
    if intervals:
        starts = np.array([a for a, _ in intervals], dtype=np.int64)
        ends = np.array([b for _, b in intervals], dtype=np.int64)
        idx = np.searchsorted(starts, centers, side="right") - 1
        inside = (idx >= 0) & (centers < ends[np.clip(idx, 0, len(ends) - 1)])
    else:
        inside = np.zeros(centers.shape, dtype=bool)
    return [
        LabeledWindow(roi_id, int(c), duration_d, ED if ins else BG)
        for c, ins in zip(centers, inside)
    ]


def merge_streams(a: EventStream, b: EventStream) -> EventStream:
    """Union of two streams on the same sensor, stably sorted by timestamp."""
    if (a.sensor_width, a.sensor_height) != (b.sensor_width, b.sensor_height):
        raise ContractError("cannot merge streams with different sensor geometry")
    t = np.concatenate([a.t, b.t])
    x = np.concatenate([a.x, b.x])
    y = np.concatenate([a.y, b.y])
    p = np.concatenate([a.p, b.p])
    order = np.argsort(t, kind="stable")
    return EventStream(
        t[order], x[order], y[order], p[order],
        a.sensor_width, a.sensor_height,
        min(a.t_begin, b.t_begin), max(a.t_end, b.t_end),
    )


# ---------------------------------------------------------------------------
# annotation files


def load_annotations(path):
    """Read the annotation JSON: sensor geometry, ROIs, and interval tracks.

    Returns (sensor_size, rois, tracks) with ``tracks`` keyed by roi id.
    """
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid annotation JSON: {exc}") from exc
    try:
        sensor = (int(doc["sensor"]["width"]), int(doc["sensor"]["height"]))
        rois = [
            Roi(str(r["id"]), int(r["x_min"]), int(r["y_min"]), int(r["x_max"]), int(r["y_max"]))
            for r in doc["rois"]
        ]
        tracks = {
            str(tr["roi_id"]): AnnotationTrack(
                str(tr["roi_id"]), tuple((int(a), int(b)) for a, b in tr["intervals"])
            )
            for tr in doc.get("tracks", [])
        }
    except (KeyError, TypeError) as exc:
        raise ParseError(f"annotation JSON missing field: {exc}") from exc
    roi_ids = {r.id for r in rois}
    for rid in tracks:
        if rid not in roi_ids:
            raise ValidationError(f"track references unknown roi {rid!r}")
    for roi in rois:
        roi.validate_for(*sensor)
    return sensor, rois, tracks


def write_annotations(path, sensor_size, rois, tracks):
    doc = {
        "sensor": {"width": sensor_size[0], "height": sensor_size[1]},
        "rois": [
            {"id": r.id, "x_min": r.x_min, "y_min": r.y_min, "x_max": r.x_max, "y_max": r.y_max}
            for r in rois
        ],
        "tracks": [
            {"roi_id": tr.roi_id, "intervals": [[a, b] for a, b in tr.intervals]}
            for tr in tracks.values()
        ] if isinstance(tracks, dict) else [
            {"roi_id": tr.roi_id, "intervals": [[a, b] for a, b in tr.intervals]}
            for tr in tracks
        ],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
