"""Precision/recall/F1 scoring with explicit zero rules for degenerate cases.

Any metric whose denominator is empty is defined as 0 and the result is
flagged ``degenerate``; pooling across ROIs is done on raw counts (micro),
never by averaging scores.
"""

from dataclasses import dataclass

from .errors import ContractError, ParameterError
from .events import BG, ED


@dataclass(frozen=True)
class Metrics:
    tp: float
    fp: float
    fn: float
    tn: float
    precision: float
    recall: float
    f1: float
    degenerate: bool

    @classmethod
    def from_counts(cls, tp, fp, fn, tn) -> "Metrics":
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        f1 = (
            2.0 * precision * recall / (precision + recall)
            if precision + recall > 0
            else 0.0
        )
        degenerate = (tp + fp == 0) or (tp + fn == 0)
        return cls(tp, fp, fn, tn, precision, recall, f1, degenerate)

    @property
    def n_samples(self):
        return self.tp + self.fp + self.fn + self.tn


def _check_label(value):
    if value not in (ED, BG):
        raise ContractError(f"labels must be {ED!r} or {BG!r}, got {value!r}")


def score(predictions, labels) -> Metrics:
    """Exact confusion counts and derived metrics for parallel label lists."""
    if len(predictions) != len(labels):
        raise ContractError(
            f"{len(predictions)} predictions vs {len(labels)} labels"
        )
    if not labels:
        raise ContractError("cannot score an empty sample")
    tp = fp = fn = tn = 0
    for pred, lab in zip(predictions, labels):
        _check_label(pred)
        _check_label(lab)
        if pred == ED:
            if lab == ED:
                tp += 1
            else:
                fp += 1
        elif lab == ED:
            fn += 1
        else:
            tn += 1
    return Metrics.from_counts(tp, fp, fn, tn)


def random_classifier_baseline(n_tot: int, n_target: int) -> Metrics:
    """Expected metrics of a fair-coin classifier on an imbalanced dataset.

    Half of each class lands on each side: tp = fn = n_target/2 and
    fp = (n_tot - n_target)/2, so recall is 0.5 and precision equals the
    positive fraction n_target/n_tot.
    """
    if not 0 < n_target <= n_tot:
        raise ParameterError("need 0 < n_target <= n_tot")
    tp = n_target / 2.0
    fn = n_target / 2.0
    fp = (n_tot - n_target) / 2.0
    tn = (n_tot - n_target) / 2.0
    return Metrics.from_counts(tp, fp, fn, tn)


def score_per_roi(rows):
    """Per-ROI metrics plus pooled (count-level) metrics.

    ``rows`` is an iterable of (roi_id, prediction, label). ROIs appear in
    the returned dict in first-appearance order.
    """
    rows = list(rows)
    if not rows:
        raise ContractError("cannot score an empty sample")
    grouped = {}
    for roi_id, pred, lab in rows:
        grouped.setdefault(roi_id, ([], []))
        preds, labs = grouped[roi_id]
        preds.append(pred)
        labs.append(lab)
    per_roi = {rid: score(preds, labs) for rid, (preds, labs) in grouped.items()}
    pooled = Metrics.from_counts(
        sum(m.tp for m in per_roi.values()),
        sum(m.fp for m in per_roi.values()),
        sum(m.fn for m in per_roi.values()),
        sum(m.tn for m in per_roi.values()),
    )
    return per_roi, pooled


def _fmt_count(c):
    return str(int(c)) if float(c).is_integer() else repr(float(c))


def write_metrics_csv(per_roi: dict, pooled: Metrics, path):
    """Export as ``roi_id,tp,fp,fn,tn,precision,recall,f1`` rows plus a pooled row."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("roi_id,tp,fp,fn,tn,precision,recall,f1\n")
        for roi_id, m in list(per_roi.items()) + [("pooled", pooled)]:
            fh.write(
                f"{roi_id},{_fmt_count(m.tp)},{_fmt_count(m.fp)},{_fmt_count(m.fn)},"
                f"{_fmt_count(m.tn)},{m.precision!r},{m.recall!r},{m.f1!r}\n"
            )
