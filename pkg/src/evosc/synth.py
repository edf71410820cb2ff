"""Synthetic event streams with ground-truth annotations.

Inside each active interval the two polarities fire as an inhomogeneous
Poisson process with anti-phase half-rectified sinusoid intensities,

    lambda_ON(t)  = max(0, A sin(2 pi f t)) + rho
    lambda_OFF(t) = max(0, -A sin(2 pi f t)) + rho

so the expected signed rate is exactly A sin(2 pi f t) while the unsigned
rate is |A sin| + 2 rho (DC plus even harmonics). Outside the intervals both
polarities fire at the background rate rho. Sampling uses thinning against
the constant envelope A + rho, which keeps generation exactly seedable.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .events import AnnotationTrack, EventStream, Roi, merge_streams, to_us


@dataclass(frozen=True)
class SynthConfig:
    roi: Roi
    frequency_f: float  # Hz
    amplitude_a: float  # peak oscillation event rate, events/s
    noise_rho: float  # background rate per polarity, events/s
    intervals: tuple  # ((t_start_us, t_end_us), ...) where the oscillation is active
    contrast_c: float = 0.15  # nominal sensor contrast threshold; metadata only
    seed: int = 0

    def __post_init__(self):
        if self.frequency_f <= 0:
            raise ValidationError("frequency must be positive")
        if self.amplitude_a < 0 or self.noise_rho < 0:
            raise ValidationError("amplitude and noise rate must be non-negative")
        object.__setattr__(
            self, "intervals", tuple((int(a), int(b)) for a, b in self.intervals)
        )
        AnnotationTrack(self.roi.id, self.intervals)  # validates ordering


def _interval_membership(t_us, intervals):
    if not intervals:
        return np.zeros(t_us.shape, dtype=bool)
    starts = np.array([a for a, _ in intervals], dtype=np.int64)
    ends = np.array([b for _, b in intervals], dtype=np.int64)
    idx = np.searchsorted(starts, t_us, side="right") - 1
    return (idx >= 0) & (t_us < ends[np.clip(idx, 0, len(ends) - 1)])


def generate(config: SynthConfig, span, sensor_size=None):
    """Generate one ROI's stream over ``span`` (us) plus its annotation track.

    Bit-identical output for identical (config, span): the polarity blocks
    and their candidate/thinning/pixel draws happen in a fixed order from a
    single seeded generator.
    """
    t_begin, t_end = int(span[0]), int(span[1])
    if t_end < t_begin:
        raise ValidationError("span end before start")
    for a, b in config.intervals:
        if a < t_begin or b > t_end:
            raise ValidationError(f"interval [{a}, {b}) outside span [{t_begin}, {t_end})")
    if sensor_size is None:
        sensor_size = (config.roi.x_max, config.roi.y_max)
    config.roi.validate_for(*sensor_size)

    rng = np.random.default_rng(config.seed)
    duration_s = (t_end - t_begin) * 1e-6
    osc = config.amplitude_a if config.intervals else 0.0
    lam_max = osc + config.noise_rho

    blocks = []
    for sign in (1, -1):
        if lam_max <= 0 or duration_s <= 0:
            n_cand = 0
        else:
            n_cand = int(rng.poisson(lam_max * duration_s))
        t_us = np.floor(rng.uniform(t_begin, t_end, n_cand)).astype(np.int64)
        u = rng.random(n_cand)
        inside = _interval_membership(t_us, config.intervals)
        wave = sign * config.amplitude_a * np.sin(
            2.0 * np.pi * config.frequency_f * (t_us * 1e-6)
        )
        intensity = config.noise_rho + inside * np.maximum(wave, 0.0)
        keep = u * lam_max < intensity
        t_acc = t_us[keep]
        x = rng.integers(config.roi.x_min, config.roi.x_max, t_acc.size)
        y = rng.integers(config.roi.y_min, config.roi.y_max, t_acc.size)
        p = np.full(t_acc.size, sign, dtype=np.int8)
        blocks.append((t_acc, x, y, p))

    t = np.concatenate([b[0] for b in blocks])
    x = np.concatenate([b[1] for b in blocks])
    y = np.concatenate([b[2] for b in blocks])
    p = np.concatenate([b[3] for b in blocks])
    order = np.argsort(t, kind="stable")
    stream = EventStream(
        t[order], x[order], y[order], p[order],
        sensor_size[0], sensor_size[1], t_begin, t_end,
    )
    return stream, AnnotationTrack(config.roi.id, config.intervals)


# ---------------------------------------------------------------------------
# multi-ROI fixture generation


def _place_intervals(rng, lo_s, hi_s, count, length_s, min_gap_s):
    """Place ``count`` non-overlapping intervals of ``length_s`` in [lo, hi] s.

    Each interval is jittered inside its own equal slot, which guarantees
    the gap structure deterministically.
    """
    if count < 1:
        return []
    slot = (hi_s - lo_s) / count
    if slot < length_s + min_gap_s:
        raise ValidationError(
            f"cannot fit {count} intervals of {length_s}s with {min_gap_s}s gaps"
        )
    out = []
    for i in range(count):
        wiggle = slot - length_s - min_gap_s
        start = lo_s + i * slot + min_gap_s / 2 + rng.uniform(0, wiggle)
        out.append((to_us(start), to_us(start + length_s)))
    return out


def _fill_gaps(rng, span_s, blocked, total_s, length_s, buffer_s, spacing_s=2.0):
    """Pack intervals of ``length_s`` into the gaps left by ``blocked``,
    keeping ``buffer_s`` clearance, until about ``total_s`` is covered.

    Placement cycles round-robin over the gaps so the distractors spread
    across the whole span instead of clustering at its start.
    """
    placed = []
    if total_s <= 0 or length_s <= 0:
        return placed
    gaps = []
    prev = 0.0
    for a, b in sorted((a * 1e-6, b * 1e-6) for a, b in blocked):
        gaps.append((prev, a))
        prev = b
    gaps.append((prev, span_s))
    cursors = [lo + buffer_s for lo, _ in gaps]
    covered = 0.0
    progress = True
    while covered + 1e-9 < total_s and progress:
        progress = False
        for gi, (_, g_hi) in enumerate(gaps):
            if covered + 1e-9 >= total_s:
                break
            start = cursors[gi] + rng.uniform(0.0, 0.5)
            if start + length_s > g_hi - buffer_s:
                continue
            placed.append((to_us(start), to_us(start + length_s)))
            covered += length_s
            cursors[gi] = start + length_s + spacing_s
            progress = True
    placed.sort()
    return placed


def _grid_rois(n_rois, sensor):
    cols = int(np.ceil(np.sqrt(n_rois)))
    rows = int(np.ceil(n_rois / cols))
    cell_w = sensor[0] // cols
    cell_h = sensor[1] // rows
    if cell_w < 4 or cell_h < 4:
        raise ValidationError(f"sensor {sensor} too small for {n_rois} ROIs")
    rois = []
    for i in range(n_rois):
        cx = (i % cols) * cell_w
        cy = (i // cols) * cell_h
        rois.append(Roi(f"N{i + 1:02d}", cx + 1, cy + 1, cx + cell_w - 1, cy + cell_h - 1))
    return rois


def make_synth_dataset(
    *,
    n_rois: int = 4,
    duration: float = 600.0,
    seed: int = 0,
    frequency: float = 2.0,
    amplitude: float = 100.0,
    noise_rho: float = 5.0,
    ed_intervals: int = 3,
    ed_length: float = 40.0,
    distractor_freq: float = 6.0,
    distractor_frac: float = 0.1,
    distractor_length: float = 10.0,
    sensor=(346, 260),
    edge_margin: float = 10.0,
    window_d: float = 5.0,
):
    """A multi-ROI fixture: per ROI an oscillation at ``frequency`` inside the
    annotated intervals, plus background noise, plus an unannotated
    "casual flap" distractor at ``distractor_freq`` covering roughly
    ``distractor_frac`` of the background time.

    Returns (stream, sensor, rois, tracks, meta); ``meta`` records every
    parameter and the distractor intervals so fixtures are reproducible.
    """
    rois = _grid_rois(n_rois, sensor)
    span = (0, to_us(duration))
    master = np.random.default_rng(seed)
    min_gap = 2.0 * (window_d + 2.0) + distractor_length
    stream = None
    tracks = {}
    meta_rois = {}
    for roi in rois:
        ed = _place_intervals(
            master, edge_margin, duration - edge_margin, ed_intervals, ed_length, min_gap
        )
        bg_time = duration - ed_intervals * ed_length
        distract = _fill_gaps(
            master, duration, ed, distractor_frac * bg_time, distractor_length,
            buffer_s=window_d + 2.0,
        )
        seed_main = int(master.integers(2**62))
        seed_dis = int(master.integers(2**62))
        main_cfg = SynthConfig(
            roi=roi, frequency_f=frequency, amplitude_a=amplitude,
            noise_rho=noise_rho, intervals=tuple(ed), seed=seed_main,
        )
        roi_stream, track = generate(main_cfg, span, sensor_size=sensor)
        if distract and distractor_frac > 0:
            dis_cfg = SynthConfig(
                roi=roi, frequency_f=distractor_freq, amplitude_a=amplitude,
                noise_rho=0.0, intervals=tuple(distract), seed=seed_dis,
            )
            dis_stream, _ = generate(dis_cfg, span, sensor_size=sensor)
            roi_stream = merge_streams(roi_stream, dis_stream)
        stream = roi_stream if stream is None else merge_streams(stream, roi_stream)
        tracks[roi.id] = track
        meta_rois[roi.id] = {
            "ed_intervals": [[a, b] for a, b in ed],
            "distractor_intervals": [[a, b] for a, b in distract],
            "seed_main": seed_main,
            "seed_distractor": seed_dis,
        }
    meta = {
        "n_rois": n_rois, "duration": duration, "seed": seed,
        "frequency": frequency, "amplitude": amplitude, "noise_rho": noise_rho,
        "ed_intervals": ed_intervals, "ed_length": ed_length,
        "distractor_freq": distractor_freq, "distractor_frac": distractor_frac,
        "distractor_length": distractor_length,
        "sensor": list(sensor), "edge_margin": edge_margin, "window_d": window_d,
        "rois": meta_rois,
    }
    return stream, sensor, rois, tracks, meta
