"""
Module for model evaluation: confusion matrices, recall / precision / F1 /
balanced accuracy, and ROC curves with trapezoidal AUC (Fawcett's threshold sweep
with tied scores grouped into one point).
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from .dataset import as_positive_mask
from .errors import ConfigError, DimensionError, ValidationError

_logger = logging.getLogger(__name__)

METRIC_NAMES = ("roc_auc", "balanced_accuracy", "f1", "precision", "recall")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fn: int
    fp: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fn, self.fp, self.tn) < 0:
            raise ValidationError("confusion counts must be >= 0")

    @property
    def positives(self):
        return self.tp + self.fn

    @property
    def negatives(self):
        return self.fp + self.tn

    def to_dict(self):
        return {"tp": self.tp, "fn": self.fn, "fp": self.fp, "tn": self.tn}


@dataclass(frozen=True)
class MetricSet:
    recall: float
    precision: float
    f1: float
    balanced_accuracy: float
    roc_auc: float = None
    degenerate: frozenset = field(default_factory=frozenset)

    def get(self, name):
        if name not in METRIC_NAMES:
            raise ConfigError(f"unknown metric {name!r}")
        return getattr(self, name)

    def to_dict(self):
        values = {name: getattr(self, name) for name in METRIC_NAMES}
        values["degenerate"] = sorted(self.degenerate)
        return values


@dataclass(frozen=True, eq=False)
class ROCCurve:
    """Points from threshold +inf down to the lowest score: (0,0) ... (1,1)"""
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray

    def points(self):
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))

    def area(self):
        return float(np.sum(np.diff(self.fpr) * (self.tpr[1:] + self.tpr[:-1]) / 2.0))


def _paired(actual, other, what):
    actual = as_positive_mask(actual)
    other = np.asarray(other)
    if actual.shape != other.shape:
        raise DimensionError(f"{actual.shape[0]} actual labels but {other.shape[0]} {what}")
    return actual, other


def confusion(actual, predicted):
    actual, predicted = _paired(actual, predicted, "predictions")
    predicted = as_positive_mask(predicted)
    return ConfusionMatrix(tp=int(np.sum(actual & predicted)),
                           fn=int(np.sum(actual & ~predicted)),
                           fp=int(np.sum(~actual & predicted)),
                           tn=int(np.sum(~actual & ~predicted)))


def _ratio(numerator, denominator, name, degenerate):
    if denominator == 0:
        degenerate.add(name)
        return 0.0
    return numerator / denominator


def metrics(cm, roc_auc=None):
    """Scalar metrics of a confusion matrix; 0/0 gives 0 and a degenerate flag"""
    degenerate = set()
    recall = _ratio(cm.tp, cm.tp + cm.fn, "recall", degenerate)
    precision = _ratio(cm.tp, cm.tp + cm.fp, "precision", degenerate)
    if precision + recall == 0:
        degenerate.add("f1")
        f1 = 0.0
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    specificity = _ratio(cm.tn, cm.tn + cm.fp, "specificity", degenerate)
    return MetricSet(recall, precision, f1, (recall + specificity) / 2.0, roc_auc,
                     frozenset(degenerate))


def roc(actual, scores):
    """ROC curve over distinct thresholds (descending) and its trapezoidal area"""
    actual, scores = _paired(actual, scores, "scores")
    scores = scores.astype(np.float64)
    n_pos = int(actual.sum())
    n_neg = actual.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("ROC needs both classes among the actual labels")

    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    tp = np.cumsum(actual[order])
    fp = np.cumsum(~actual[order])
    # last position of each run of equal scores
    ends = np.flatnonzero(np.append(sorted_scores[1:] != sorted_scores[:-1], True))
    tpr = np.concatenate([[0.0], tp[ends] / n_pos])
    fpr = np.concatenate([[0.0], fp[ends] / n_neg])
    thresholds = np.concatenate([[np.inf], sorted_scores[ends]])
    curve = ROCCurve(fpr, tpr, thresholds)
    return curve, curve.area()


def evaluate_predictions(actual, scores, threshold=0.5):
    """MetricSet for stored scores; predictions are score >= threshold"""
    actual, scores = _paired(actual, scores, "scores")
    cm = confusion(actual, np.asarray(scores, dtype=np.float64) >= threshold)
    _, auc = roc(actual, scores)
    return metrics(cm, roc_auc=auc)


def metric_from_scores(name, actual, scores):
    if name not in METRIC_NAMES:
        raise ConfigError(f"unknown metric {name!r}; expected one of {list(METRIC_NAMES)}")
    return evaluate_predictions(actual, scores).get(name)
