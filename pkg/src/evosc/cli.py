"""Command-line entry point wiring the library into end-to-end workflows.

Subcommands: ingest, rate, psd, spectrogram, synth, tune, train, eval,
classify. Exit statuses: 0 on success, 2 for usage/validation problems,
3 for data/runtime problems. Output files are written atomically (temp file
plus rename), and every seeded command is byte-reproducible.
"""

import functools
import json
import os
import sys
import tempfile

import click
import numpy as np

from . import dataset as ds
from . import events as ev
from . import metrics as mx
from . import nets
from . import rate as rt
from . import spectral as sp
from . import synth
from . import tuning
from .errors import (
    ContractError,
    EvoscError,
    OrderingError,
    ParameterError,
    ParseError,
    RangeError,
    TrainingError,
    ValidationError,
)

RUN_DEFAULTS = {
    "window_d": 5.0,
    "bin_width_dt": 0.01,
    "stride": 0.033,
    "psd_method": sp.PERIODOGRAM,
    "rate_kind": rt.SIGNED,
    "seed": 0,
}

_USAGE_ERRORS = (ValidationError, ParameterError, ContractError)
_DATA_ERRORS = (ParseError, OrderingError, RangeError, TrainingError, OSError)


def wrap_errors(func):
    @functools.wraps(func)
    def inner(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except _USAGE_ERRORS as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except _DATA_ERRORS as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(3)
        except EvoscError as exc:  # anything else from the library
            click.echo(f"error: {exc}", err=True)
            sys.exit(3)

    return inner


def atomic_write(path, writer):
    """Run ``writer(tmp_path)`` then atomically rename onto ``path``."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=os.path.basename(path) + ".", suffix=".tmp")
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def resolve_run_config(config_path, **flags):
    """Merge precedence: explicit flags > config file > defaults."""
    cfg = dict(RUN_DEFAULTS)
    if config_path:
        with open(config_path, "r", encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid run config JSON: {exc}") from exc
        unknown = set(doc) - set(RUN_DEFAULTS)
        if unknown:
            raise ValidationError(f"unknown run config keys: {sorted(unknown)}")
        cfg.update(doc)
    for key, value in flags.items():
        if value is not None:
            cfg[key] = value
    if cfg["stride"] <= 0:
        raise ValidationError("stride must be positive")
    rt.n_bins_for(cfg["window_d"], cfg["bin_width_dt"])  # validates the pair
    return cfg


def run_config_options(func):
    opts = [
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                     default=None, help="Optional run-config JSON (flags win)."),
        click.option("--window", "window_d", type=float, default=None,
                     help=f"Window duration d in seconds (default {RUN_DEFAULTS['window_d']})."),
        click.option("--bin-width", "bin_width_dt", type=float, default=None,
                     help=f"Rate bin width in seconds (default {RUN_DEFAULTS['bin_width_dt']})."),
        click.option("--stride", type=float, default=None,
                     help=f"Window stride in seconds (default {RUN_DEFAULTS['stride']})."),
        click.option("--psd-method", type=click.Choice([sp.PERIODOGRAM, sp.WELCH]), default=None),
        click.option("--rate-kind", type=click.Choice(list(rt.RATE_KINDS)), default=None),
        click.option("--seed", type=int, default=None, help="Seed for all randomized steps."),
    ]
    for opt in reversed(opts):
        func = opt(func)
    return func


def io_options(func):
    opts = [
        click.option("--events", "events_path", type=click.Path(exists=True, dir_okay=False),
                     required=True, help="Event file (CSV or EVB1 binary)."),
        click.option("--format", "events_format", type=click.Choice(["csv", "binary"]),
                     default="csv", show_default=True),
        click.option("--annotations", "annotations_path",
                     type=click.Path(exists=True, dir_okay=False), required=True,
                     help="Annotation JSON with sensor, ROIs, and tracks."),
    ]
    for opt in reversed(opts):
        func = opt(func)
    return func


def load_inputs(events_path, events_format, annotations_path):
    sensor, rois, tracks = ev.load_annotations(annotations_path)
    if events_format == "csv":
        stream = ev.parse_event_csv(events_path, sensor_size=sensor)
    else:
        stream = ev.parse_event_binary(events_path)
    return stream, sensor, rois, tracks


def _roi_by_id(rois, roi_id):
    for roi in rois:
        if roi.id == roi_id:
            return roi
    raise ValidationError(f"roi {roi_id!r} not found in the annotations")


def _window_rate(stream, roi, center_s, cfg):
    cropped = ev.crop_to_roi(stream, roi)
    window = ev.slice_window(cropped, ev.to_us(center_s), cfg["window_d"])
    n_bins = rt.n_bins_for(cfg["window_d"], cfg["bin_width_dt"])
    signal = rt.bin_events(window, cfg["bin_width_dt"], n_bins)
    if cfg["rate_kind"] == rt.UNSIGNED:
        signal = rt.to_unsigned(signal)
    elif cfg["rate_kind"] == rt.ZERO_MEAN:
        signal = rt.to_zero_mean(rt.to_unsigned(signal))
    return signal


def _psd_of(signal, cfg, segment_len, overlap, window_fn):
    if cfg["psd_method"] == sp.WELCH:
        if segment_len is None:
            segment_len = max(2, len(signal) // 4)
        return sp.welch(signal, segment_len, overlap, window_fn)
    return sp.periodogram(signal)


@click.group()
def main():
    """Detect oscillatory actions in event-camera data via Fourier analysis."""


# ---------------------------------------------------------------------------


@main.command()
@click.option("--events", "events_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--format", "events_format", type=click.Choice(["csv", "binary"]), default="csv",
              show_default=True)
@click.option("--annotations", "annotations_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Optional; fixes the sensor geometry for CSV input.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
              help="Converted copy; format chosen by --out-format.")
@click.option("--out-format", type=click.Choice(["csv", "binary"]), default="csv",
              show_default=True)
@wrap_errors
def ingest(events_path, events_format, annotations_path, out_path, out_format):
    """Validate an event file and optionally convert between formats."""
    sensor = None
    if annotations_path:
        sensor, _, _ = ev.load_annotations(annotations_path)
    if events_format == "csv":
        stream = ev.parse_event_csv(events_path, sensor_size=sensor)
    else:
        stream = ev.parse_event_binary(events_path)
    click.echo(
        f"{len(stream)} events, sensor {stream.sensor_width}x{stream.sensor_height}, "
        f"span [{stream.t_begin}, {stream.t_end}) us"
    )
    if out_path:
        writer = ev.write_event_csv if out_format == "csv" else ev.write_event_binary
        atomic_write(out_path, lambda tmp: writer(stream, tmp))
        click.echo(f"wrote {out_path}")


@main.command("rate")
@io_options
@click.option("--roi", "roi_id", required=True)
@click.option("--center", type=float, required=True, help="Window center in seconds.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@run_config_options
@wrap_errors
def rate_cmd(events_path, events_format, annotations_path, roi_id, center, out_path,
             config_path, **flags):
    """Export one window's binned rate signal as CSV."""
    cfg = resolve_run_config(config_path, **flags)
    stream, _, rois, _ = load_inputs(events_path, events_format, annotations_path)
    signal = _window_rate(stream, _roi_by_id(rois, roi_id), center, cfg)
    atomic_write(out_path, lambda tmp: rt.write_rate_csv(signal, tmp))
    click.echo(f"wrote {out_path}")


@main.command("psd")
@io_options
@click.option("--roi", "roi_id", required=True)
@click.option("--center", type=float, required=True, help="Window center in seconds.")
@click.option("--segment-len", type=int, default=None, help="Welch segment length in bins.")
@click.option("--overlap", type=float, default=0.5, show_default=True)
@click.option("--window-fn", type=click.Choice([sp.RECTANGULAR, sp.HANN]), default=sp.HANN,
              show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@run_config_options
@wrap_errors
def psd_cmd(events_path, events_format, annotations_path, roi_id, center, segment_len,
            overlap, window_fn, out_path, config_path, **flags):
    """Export one window's power spectral density as CSV."""
    cfg = resolve_run_config(config_path, **flags)
    stream, _, rois, _ = load_inputs(events_path, events_format, annotations_path)
    signal = _window_rate(stream, _roi_by_id(rois, roi_id), center, cfg)
    psd = _psd_of(signal, cfg, segment_len, overlap, window_fn)
    atomic_write(out_path, lambda tmp: sp.write_psd_csv(psd, tmp))
    click.echo(f"wrote {out_path}")


@main.command("spectrogram")
@io_options
@click.option("--roi", "roi_id", required=True)
@click.option("--window-len", type=int, default=500, show_default=True,
              help="Spectrogram column length in bins.")
@click.option("--hop", type=int, default=100, show_default=True, help="Column hop in bins.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@run_config_options
@wrap_errors
def spectrogram_cmd(events_path, events_format, annotations_path, roi_id, window_len, hop,
                    out_path, config_path, **flags):
    """Export a sliding-window spectrogram of one ROI's whole-stream rate."""
    cfg = resolve_run_config(config_path, **flags)
    stream, _, rois, _ = load_inputs(events_path, events_format, annotations_path)
    cropped = ev.crop_to_roi(stream, _roi_by_id(rois, roi_id))
    dt_us = ev.to_us(cfg["bin_width_dt"])
    n_bins = (stream.t_end - stream.t_begin) // dt_us
    if n_bins < window_len:
        raise ParameterError("stream shorter than one spectrogram window")
    whole = ev.slice_span(cropped, stream.t_begin, stream.t_begin + n_bins * dt_us)
    signal = rt.bin_events(whole, cfg["bin_width_dt"], int(n_bins))
    if cfg["rate_kind"] == rt.UNSIGNED:
        signal = rt.to_unsigned(signal)
    elif cfg["rate_kind"] == rt.ZERO_MEAN:
        signal = rt.to_zero_mean(rt.to_unsigned(signal))
    spec = sp.spectrogram(signal, window_len, hop)
    atomic_write(out_path, lambda tmp: sp.write_spectrogram_csv(spec, tmp))
    click.echo(f"wrote {out_path} ({len(spec.columns)} columns)")


@main.command("synth")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@click.option("--rois", "n_rois", type=int, default=4, show_default=True)
@click.option("--duration", type=float, default=600.0, show_default=True)
@click.option("--freq", type=float, default=2.0, show_default=True)
@click.option("--amplitude", type=float, default=100.0, show_default=True)
@click.option("--noise", "noise_rho", type=float, default=5.0, show_default=True)
@click.option("--ed-intervals", type=int, default=3, show_default=True)
@click.option("--ed-length", type=float, default=40.0, show_default=True)
@click.option("--distractor-freq", type=float, default=6.0, show_default=True)
@click.option("--distractor-frac", type=float, default=0.1, show_default=True)
@click.option("--distractor-length", type=float, default=10.0, show_default=True)
@click.option("--sensor", default="346x260", show_default=True, help="WIDTHxHEIGHT pixels.")
@click.option("--seed", type=int, default=0, show_default=True)
@wrap_errors
def synth_cmd(out_dir, n_rois, duration, freq, amplitude, noise_rho, ed_intervals, ed_length,
              distractor_freq, distractor_frac, distractor_length, sensor, seed):
    """Generate a synthetic multi-ROI dataset (events.csv + annotations.json)."""
    try:
        width, height = (int(v) for v in sensor.lower().split("x"))
    except ValueError:
        raise ValidationError(f"--sensor must look like 346x260, got {sensor!r}") from None
    stream, sensor_size, rois, tracks, meta = synth.make_synth_dataset(
        n_rois=n_rois, duration=duration, seed=seed, frequency=freq, amplitude=amplitude,
        noise_rho=noise_rho, ed_intervals=ed_intervals, ed_length=ed_length,
        distractor_freq=distractor_freq, distractor_frac=distractor_frac,
        distractor_length=distractor_length, sensor=(width, height),
    )
    os.makedirs(out_dir, exist_ok=True)
    atomic_write(os.path.join(out_dir, "events.csv"),
                 lambda tmp: ev.write_event_csv(stream, tmp))
    atomic_write(os.path.join(out_dir, "annotations.json"),
                 lambda tmp: ev.write_annotations(tmp, sensor_size, rois, tracks))

    def write_meta(tmp):
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(meta, fh, indent=2)
            fh.write("\n")

    atomic_write(os.path.join(out_dir, "synth_meta.json"), write_meta)
    click.echo(f"wrote {out_dir}/events.csv ({len(stream)} events), annotations.json")


def _build_table(stream, rois, tracks, cfg, **kwargs):
    return ds.build_window_table(
        stream, rois, tracks,
        window_d=cfg["window_d"], bin_width_dt=cfg["bin_width_dt"], stride=cfg["stride"],
        rate_kind=cfg["rate_kind"], psd_method=cfg["psd_method"], **kwargs,
    )


def _select_split(table, split, train_frac):
    if split == "all":
        return table
    train, test = ds.split_train_test(table, train_frac)
    return train if split == "train" else test


@main.command("tune")
@io_options
@click.option("--classifier", type=click.Choice(["energy-band", "energy"]),
              default="energy-band", show_default=True)
@click.option("--mode", type=click.Choice(["global", "per-roi"]), default="global",
              show_default=True)
@click.option("--samples", type=int, default=1000, show_default=True)
@click.option("--train-frac", type=float, default=0.7, show_default=True,
              help="Chronological fraction of windows used for tuning.")
@click.option("--split", type=click.Choice(["train", "all"]), default="train",
              show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@run_config_options
@wrap_errors
def tune_cmd(events_path, events_format, annotations_path, classifier, mode, samples,
             train_frac, split, out_path, config_path, **flags):
    """Random-search classifier thresholds on the training windows."""
    cfg = resolve_run_config(config_path, **flags)
    stream, _, rois, tracks = load_inputs(events_path, events_format, annotations_path)
    table = _build_table(stream, rois, tracks, cfg)
    table = _select_split(table, split, train_frac)
    if classifier == "energy":
        top = float(table.totals.max()) if len(table) else 1.0
        result = tuning.tune_energy(
            table.totals, table.labels, samples, (0.0, top if top > 0 else 1.0),
            seed=cfg["seed"],
        )
    else:
        space = tuning.SearchSpace(n_samples=samples, seed=cfg["seed"])
        result = tuning.tune_energy_band(
            table, space, tuning.PER_ROI if mode == "per-roi" else tuning.GLOBAL
        )
    atomic_write(out_path, lambda tmp: tuning.save_tune_result(result, tmp))
    click.echo(f"train F1 {result.train_f1:.4f}; wrote {out_path}")


@main.command("train")
@io_options
@click.option("--arch", type=click.Choice([nets.FC, nets.CONV1D]), required=True)
@click.option("--input", "input_kind", type=click.Choice([nets.SPECTRUM, nets.RATE]),
              default=nets.SPECTRUM, show_default=True)
@click.option("--epochs", type=int, default=50, show_default=True)
@click.option("--lr", type=float, default=0.003, show_default=True)
@click.option("--batch-size", type=int, default=32, show_default=True)
@click.option("--class-weights", default="auto", show_default=True,
              help="'auto' (inverse frequency), 'none', or 'W_BG,W_ED'.")
@click.option("--train-frac", type=float, default=0.7, show_default=True)
@click.option("--split", type=click.Choice(["train", "all"]), default="train",
              show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@run_config_options
@wrap_errors
def train_cmd(events_path, events_format, annotations_path, arch, input_kind, epochs, lr,
              batch_size, class_weights, train_frac, split, out_path, config_path, **flags):
    """Train a tiny net on the training windows and save the model JSON."""
    cfg = resolve_run_config(config_path, **flags)
    stream, _, rois, tracks = load_inputs(events_path, events_format, annotations_path)
    table = _build_table(
        stream, rois, tracks, cfg,
        keep_spectra=input_kind == nets.SPECTRUM, keep_rates=input_kind == nets.RATE,
    )
    table = _select_split(table, split, train_frac)
    inputs = ds.net_inputs(table, input_kind)
    labels = ds.table_labels(table)
    if class_weights == "auto":
        weights = nets.inverse_frequency_weights(labels)
    elif class_weights == "none":
        weights = (1.0, 1.0)
    else:
        try:
            w_bg, w_ed = (float(v) for v in class_weights.split(","))
        except ValueError:
            raise ValidationError(
                f"--class-weights must be 'auto', 'none' or 'W_BG,W_ED', got {class_weights!r}"
            ) from None
        weights = (w_bg, w_ed)
    net = nets.build_tiny_net(input_kind, inputs.shape[1], arch, seed=cfg["seed"])
    config = nets.TrainConfig(
        learning_rate=lr, batch_size=batch_size, epochs=epochs,
        class_weights=weights, seed=cfg["seed"],
    )
    result = nets.train(net, list(zip(inputs, labels)), config)
    atomic_write(out_path, lambda tmp: nets.save_model(net, tmp))
    click.echo(
        f"{arch} net ({net.param_count} params), final loss {result.final_loss:.6f}; "
        f"wrote {out_path}"
    )


def _predictions_and_scores(table, classifier, params_path):
    if classifier == "net":
        net = nets.load_model(params_path)
        preds = ds.predict_net(net, table)
        x = ds.net_inputs(table, net.input_kind)
        logits = np.concatenate(
            [net.forward_batch(x[i : i + 2048]) for i in range(0, len(x), 2048)]
        )
        scores = (logits[:, 1] - logits[:, 0]).tolist()
        return preds, scores
    result = tuning.load_tune_result(params_path)
    if classifier == "energy":
        if result.classifier != "energy":
            raise ContractError("params file does not hold an energy threshold")
        preds = ds.predict_energy(table, result.best_params)
        scores = [float(t) for t in table.totals]
        return preds, scores
    if result.classifier != "energy-band":
        raise ContractError("params file does not hold energy-band parameters")
    if result.mode == tuning.PER_ROI:
        params_by_roi = result.per_roi
    else:
        params_by_roi = {rid: result.best_params for rid in set(table.roi_ids)}
    preds = ds.predict_energy_band(table, params_by_roi)
    scores = []
    for i, rid in enumerate(table.roi_ids):
        p = params_by_roi[rid]
        feature = sp.band_energy(table.psd_row(i), p.f_l, p.f_u)
        scores.append(feature.normalized)
    return preds, scores


@main.command("eval")
@io_options
@click.option("--classifier", type=click.Choice(["energy-band", "energy", "net"]),
              required=True)
@click.option("--params", "params_path", type=click.Path(exists=True, dir_okay=False),
              required=True, help="Tune-result JSON or model JSON.")
@click.option("--split", type=click.Choice(["train", "test", "all"]), default="test",
              show_default=True)
@click.option("--train-frac", type=float, default=0.7, show_default=True)
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
@run_config_options
@wrap_errors
def eval_cmd(events_path, events_format, annotations_path, classifier, params_path, split,
             train_frac, out_dir, config_path, **flags):
    """Score a classifier on a window split; writes metrics.csv + predictions.csv."""
    cfg = resolve_run_config(config_path, **flags)
    stream, _, rois, tracks = load_inputs(events_path, events_format, annotations_path)
    keep = {}
    if classifier == "net":
        net = nets.load_model(params_path)
        keep = {"keep_spectra": net.input_kind == nets.SPECTRUM,
                "keep_rates": net.input_kind == nets.RATE}
    table = _build_table(stream, rois, tracks, cfg, **keep)
    table = _select_split(table, split, train_frac)
    preds, scores = _predictions_and_scores(table, classifier, params_path)
    labels = ds.table_labels(table)
    per_roi, pooled = mx.score_per_roi(list(zip(table.roi_ids, preds, labels)))
    os.makedirs(out_dir, exist_ok=True)
    atomic_write(os.path.join(out_dir, "metrics.csv"),
                 lambda tmp: mx.write_metrics_csv(per_roi, pooled, tmp))

    def write_preds(tmp):
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("roi_id,center_us,label,prediction,score\n")
            for rid, center, lab, pred, s in zip(
                table.roi_ids, table.centers, labels, preds, scores
            ):
                fh.write(f"{rid},{int(center)},{lab},{pred},{float(s)!r}\n")

    atomic_write(os.path.join(out_dir, "predictions.csv"), write_preds)
    click.echo(
        f"{split} split: {len(table)} windows, pooled precision {pooled.precision:.4f} "
        f"recall {pooled.recall:.4f} F1 {pooled.f1:.4f}; wrote {out_dir}"
    )


@main.command("classify")
@io_options
@click.option("--roi", "roi_id", required=True)
@click.option("--center", type=float, required=True, help="Window center in seconds.")
@click.option("--classifier", type=click.Choice(["energy-band", "energy", "net"]),
              required=True)
@click.option("--params", "params_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@run_config_options
@wrap_errors
def classify_cmd(events_path, events_format, annotations_path, roi_id, center, classifier,
                 params_path, config_path, **flags):
    """Classify a single window; prints ED or BG."""
    cfg = resolve_run_config(config_path, **flags)
    stream, _, rois, _ = load_inputs(events_path, events_format, annotations_path)
    signal = _window_rate(stream, _roi_by_id(rois, roi_id), center, cfg)
    if classifier == "net":
        net = nets.load_model(params_path)
        if net.input_kind == nets.SPECTRUM:
            vec = nets.peak_normalize(sp.fft(signal.values, dt=cfg["bin_width_dt"]).magnitudes)
        else:
            vec = nets.peak_normalize(signal.values)
        click.echo(net.predict(vec))
        return
    result = tuning.load_tune_result(params_path)
    psd = _psd_of(signal, cfg, None, 0.5, sp.HANN)
    if classifier == "energy":
        from .classifiers import classify_energy

        click.echo(classify_energy(psd.total_energy, result.best_params))
        return
    if result.mode == tuning.PER_ROI:
        params = result.per_roi.get(roi_id)
        if params is None:
            raise ContractError(f"no tuned band for roi {roi_id!r}")
    else:
        params = result.best_params
    from .classifiers import classify_energy_band

    feature = sp.band_energy(psd, params.f_l, params.f_u)
    click.echo(classify_energy_band(feature, params))


if __name__ == "__main__":
    main()
