"""Random-search tuning of the threshold classifiers.

Candidates are drawn uniformly from a seeded generator and scored by
training-set F1; the best candidate wins, first-drawn breaking ties. Band
candidates are (f_mid, b, lambda) triplets; the band edges follow as
f_mid -+ b/2. Candidate evaluation works on cached per-window PSDs via
prefix sums, so a 1000-candidate search over tens of thousands of windows
stays fast.
"""

import json
from dataclasses import dataclass

import numpy as np

from .classifiers import EnergyBandParams, EnergyParams
from .dataset import WindowTable
from .errors import ParameterError, ValidationError
from .spectral import band_bin_range

GLOBAL = "global"
PER_ROI = "per_roi"
TUNE_FILE_VERSION = 1


@dataclass(frozen=True)
class SearchSpace:
    f_mid_range: tuple = (1.8, 6.0)
    b_range: tuple = (0.3, 1.8)
    lambda_range: tuple = (0.05, 0.3)
    n_samples: int = 1000
    seed: int = 0

    def __post_init__(self):
        for lo, hi in (self.f_mid_range, self.b_range, self.lambda_range):
            if not lo < hi:
                raise ValidationError(f"range [{lo}, {hi}] must have low < high")
        if self.n_samples < 1:
            raise ValidationError("need at least one sample")


@dataclass
class TuneResult:
    classifier: str  # "energy-band" or "energy"
    mode: str  # global or per_roi
    seed: int
    n_samples: int
    space: dict
    train_f1: float
    best_params: object = None  # EnergyBandParams or EnergyParams (global mode)
    per_roi: dict | None = None  # roi id -> EnergyBandParams (per-ROI mode)
    roi_train_f1: dict | None = None


def _f1_from_bool(preds: np.ndarray, positives: np.ndarray) -> float:
    tp = int(np.count_nonzero(preds & positives))
    fp = int(np.count_nonzero(preds & ~positives))
    fn = int(np.count_nonzero(~preds & positives))
    denom = 2 * tp + fp + fn
    return 2.0 * tp / denom if denom > 0 else 0.0


def _draw_band_candidates(space: SearchSpace) -> list:
    """n_samples valid triplets; draws with f_mid - b/2 < 0 are redrawn."""
    rng = np.random.default_rng(space.seed)
    cands = []
    attempts = 0
    limit = 1000 * space.n_samples
    while len(cands) < space.n_samples:
        attempts += 1
        if attempts > limit:
            raise ParameterError("search space yields almost no valid bands")
        f_mid = rng.uniform(*space.f_mid_range)
        b = rng.uniform(*space.b_range)
        lam = rng.uniform(*space.lambda_range)
        if f_mid - b / 2 < 0:
            continue
        cands.append((f_mid, b, lam))
    return cands


def _normalized_band_rows(table: WindowTable, csum: np.ndarray, f_l: float, f_u: float):
    j_lo, j_hi = band_bin_range(table.df, table.power.shape[1], f_l, f_u)
    if j_lo > j_hi:
        return np.zeros(len(table))
    band = (csum[:, j_hi + 1] - csum[:, j_lo]) * table.df
    return np.divide(
        band, table.totals, out=np.zeros_like(band), where=table.totals > 0
    )


def tune_energy_band(table: WindowTable, space: SearchSpace, mode: str = GLOBAL) -> TuneResult:
    """Argmax-train-F1 search for band parameters, shared or one set per ROI.

    In per-ROI mode every ROI picks its own argmax over the same candidate
    list, and the reported train F1 pools the winning per-ROI predictions.
    """
    if mode not in (GLOBAL, PER_ROI):
        raise ParameterError(f"unknown tuning mode {mode!r}")
    if len(table) == 0:
        raise ParameterError("feature table is empty")
    candidates = _draw_band_candidates(space)
    csum = np.concatenate(
        [np.zeros((len(table), 1)), np.cumsum(table.power, axis=1)], axis=1
    )
    positives = table.labels
    space_doc = {
        "f_mid": list(space.f_mid_range),
        "b": list(space.b_range),
        "lambda": list(space.lambda_range),
    }

    if mode == GLOBAL:
        best = None
        best_f1 = -1.0
        for f_mid, b, lam in candidates:
            normalized = _normalized_band_rows(table, csum, f_mid - b / 2, f_mid + b / 2)
            f1 = _f1_from_bool(normalized > lam, positives)
            if f1 > best_f1:
                best_f1 = f1
                best = EnergyBandParams(f_mid, b, lam)
        return TuneResult(
            classifier="energy-band", mode=mode, seed=space.seed,
            n_samples=space.n_samples, space=space_doc,
            train_f1=best_f1, best_params=best,
        )

    rois = table.unique_rois
    masks = {rid: table.roi_mask(rid) for rid in rois}
    best = {rid: None for rid in rois}
    best_f1 = {rid: -1.0 for rid in rois}
    for f_mid, b, lam in candidates:
        normalized = _normalized_band_rows(table, csum, f_mid - b / 2, f_mid + b / 2)
        preds = normalized > lam
        for rid in rois:
            m = masks[rid]
            f1 = _f1_from_bool(preds[m], positives[m])
            if f1 > best_f1[rid]:
                best_f1[rid] = f1
                best[rid] = EnergyBandParams(f_mid, b, lam)
    # pooled training F1 of the selected per-ROI parameters
    tp = fp = fn = 0
    for rid in rois:
        p = best[rid]
        normalized = _normalized_band_rows(table, csum, p.f_l, p.f_u)
        preds = normalized > p.decision_lambda
        m = masks[rid]
        tp += int(np.count_nonzero(preds[m] & positives[m]))
        fp += int(np.count_nonzero(preds[m] & ~positives[m]))
        fn += int(np.count_nonzero(~preds[m] & positives[m]))
    denom = 2 * tp + fp + fn
    pooled_f1 = 2.0 * tp / denom if denom > 0 else 0.0
    return TuneResult(
        classifier="energy-band", mode=mode, seed=space.seed,
        n_samples=space.n_samples, space=space_doc,
        train_f1=pooled_f1, per_roi=best, roi_train_f1=best_f1,
    )


def tune_energy(energies, labels, n_samples: int, value_range, seed: int = 0) -> TuneResult:
    """Argmax-train-F1 search for a scalar total-energy threshold."""
    energies = np.asarray(energies, dtype=np.float64)
    positives = np.asarray(labels, dtype=bool)
    if energies.size == 0 or energies.shape != positives.shape:
        raise ParameterError("need equally long, non-empty energies and labels")
    lo, hi = value_range
    if not lo < hi:
        raise ParameterError("threshold range must have low < high")
    if n_samples < 1:
        raise ParameterError("need at least one sample")
    rng = np.random.default_rng(seed)
    best = None
    best_f1 = -1.0
    for _ in range(n_samples):
        thr = rng.uniform(lo, hi)
        f1 = _f1_from_bool(energies > thr, positives)
        if f1 > best_f1:
            best_f1 = f1
            best = EnergyParams(threshold=thr)
    return TuneResult(
        classifier="energy", mode=GLOBAL, seed=seed, n_samples=n_samples,
        space={"threshold": [lo, hi]}, train_f1=best_f1, best_params=best,
    )


# ---------------------------------------------------------------------------
# serialization


def _band_doc(p: EnergyBandParams) -> dict:
    return {"f_mid": p.f_mid, "b": p.bandwidth_b, "lambda": p.decision_lambda}


def save_tune_result(result: TuneResult, path):
    doc = {
        "version": TUNE_FILE_VERSION,
        "classifier": result.classifier,
        "mode": result.mode,
        "seed": result.seed,
        "n_samples": result.n_samples,
        "space": result.space,
        "train_f1": result.train_f1,
    }
    if result.classifier == "energy":
        doc["params"] = {"threshold": result.best_params.threshold}
    elif result.mode == GLOBAL:
        doc["params"] = _band_doc(result.best_params)
    else:
        doc["params"] = {rid: _band_doc(p) for rid, p in result.per_roi.items()}
        doc["roi_train_f1"] = result.roi_train_f1
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_tune_result(path) -> TuneResult:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("version") != TUNE_FILE_VERSION:
        raise ParameterError(f"unsupported tune file version {doc.get('version')!r}")
    result = TuneResult(
        classifier=doc["classifier"], mode=doc["mode"], seed=doc["seed"],
        n_samples=doc["n_samples"], space=doc["space"], train_f1=doc["train_f1"],
    )
    params = doc["params"]
    if result.classifier == "energy":
        result.best_params = EnergyParams(threshold=params["threshold"])
    elif result.mode == GLOBAL:
        result.best_params = EnergyBandParams(params["f_mid"], params["b"], params["lambda"])
    else:
        result.per_roi = {
            rid: EnergyBandParams(p["f_mid"], p["b"], p["lambda"]) for rid, p in params.items()
        }
        result.roi_train_f1 = doc.get("roi_train_f1")
    return result
