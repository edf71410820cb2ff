"""evosc: oscillatory-action detection in event-camera data.

A window of events from a region of interest is summarized into a 1-D
signed event rate, transformed to the Fourier domain, and classified either
by thresholding the normalized energy in a frequency band or with tiny
neural classifiers over the spectrum or raw rate. Ships with a random-search
tuning harness, an evaluation harness, and a seeded synthetic-data
generator for oracle testing.
"""

from .backend import active_backend
from .classifiers import (
    EnergyBandParams,
    EnergyParams,
    classify_energy,
    classify_energy_band,
)
from .dataset import (
    WindowTable,
    build_window_table,
    net_inputs,
    predict_energy,
    predict_energy_band,
    predict_net,
    split_train_test,
    table_labels,
)
from .events import (
    BG,
    ED,
    AnnotationTrack,
    Event,
    EventStream,
    LabeledWindow,
    Roi,
    crop_to_roi,
    generate_labels,
    load_annotations,
    merge_streams,
    parse_event_file,
    slice_window,
    to_us,
    window_centers,
    write_annotations,
    write_event_csv,
)
from .metrics import Metrics, random_classifier_baseline, score, score_per_roi
from .nets import (
    TinyNet,
    TrainConfig,
    build_tiny_net,
    inverse_frequency_weights,
    load_model,
    peak_normalize,
    save_model,
    train,
)
from .rate import RateSignal, bin_events, n_bins_for, to_unsigned, to_zero_mean
from .spectral import (
    BandEnergyFeature,
    PsdEstimate,
    Spectrogram,
    Spectrum,
    band_energy,
    dft_naive,
    fft,
    periodogram,
    spectrogram,
    welch,
)
from .synth import SynthConfig, generate, make_synth_dataset
from .tuning import (
    SearchSpace,
    TuneResult,
    load_tune_result,
    save_tune_result,
    tune_energy,
    tune_energy_band,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
