"""Evaluation of determinate and indeterminate classifiers.

Besides the usual accuracy/AUC/recall, indeterminate predictions are scored
with discounted accuracy (1/m for an m-class prediction containing the
truth) and its quadratic utility transforms u65 and u80, and test instances
are split into the safe and the prior-dependent group according to whether
the credal classifier returned a single class.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .decision import Prediction

# quadratic u(x) = a*x^2 + b*x through u(0)=0, u(1)=1 and u(0.5) = 0.65 / 0.80
_UTILITY_COEFFS = {"u65": (-0.6, 1.6), "u80": (-1.2, 2.2)}


@dataclass(frozen=True)
class EvaluationReport:
    """Scores of one point predictor / credal predictor pair on a test set.

    ``acc_safe`` and ``acc_prior_dependent`` are the point predictor's
    accuracies on the instances the credal predictor found determinate and
    indeterminate respectively; they are None when the subset is empty.
    The confusion counts refer to the point predictions.
    """

    accuracy: float
    auc: float
    recall: float
    indeterminacy: float
    acc_safe: float | None
    acc_prior_dependent: float | None
    discounted_accuracy: float
    u65: float
    u80: float
    n_test: int
    n_indeterminate: int
    tp: int
    fp: int
    tn: int
    fn: int


def accuracy(preds: Sequence[int], truth: Sequence[int]) -> float:
    """Fraction of point predictions equal to the true class."""
    preds = np.asarray(preds)
    truth = np.asarray(truth)
    if len(preds) != len(truth):
        raise ValueError("predictions and truth differ in length")
    if len(truth) == 0:
        raise ValueError("empty input")
    return float(np.mean(preds == truth))


def auc(scores: Sequence[float], truth: Sequence[int]) -> float:
    """Area under the ROC curve via the Mann-Whitney rank statistic.

    Ties between a positive and a negative score count half, which is the
    standard mid-rank convention.
    """
    scores = np.asarray(scores, dtype=np.float64)
    truth = np.asarray(truth)
    n1 = int(np.sum(truth == 1))
    n0 = int(np.sum(truth == 0))
    if n1 == 0 or n0 == 0:
        raise ValueError("AUC needs both classes in the truth vector")
    ranks = rankdata(scores)
    u = float(np.sum(ranks[truth == 1])) - n1 * (n1 + 1) / 2.0
    return u / (n1 * n0)


def recall(preds: Sequence[int], truth: Sequence[int]) -> float:
    """Fraction of true positives among actual positives."""
    preds = np.asarray(preds)
    truth = np.asarray(truth)
    positives = truth == 1
    if not positives.any():
        raise ValueError("recall needs at least one positive instance")
    return float(np.mean(preds[positives] == 1))


def discounted_accuracy(pred: Prediction, truth: int) -> float:
    """1 for a correct determinate prediction, 0 for a wrong one, 1/2 otherwise.

    In the binary case an indeterminate prediction always contains the
    truth, so it always scores 1/2.
    """
    if pred.determinate:
        return 1.0 if pred.predicted == truth else 0.0
    return 0.5


def utility(score: float, which: str) -> float:
    """Quadratic utility of a discounted-accuracy score ("u65" or "u80")."""
    try:
        a, b = _UTILITY_COEFFS[which]
    except KeyError:
        raise ValueError(f"unknown utility {which!r} (expected 'u65' or 'u80')") from None
    if not 0.0 <= score <= 1.0:
        raise ValueError(f"score {score} outside [0, 1]")
    return a * score**2 + b * score


def split_report(
    bma_probs: Sequence[float],
    cma_preds: Sequence[Prediction],
    truth: Sequence[int],
) -> EvaluationReport:
    """Joint report for a point predictor and a credal predictor.

    ``bma_probs`` are the point predictor's class-1 probabilities; its
    class predictions use the 0.5 threshold.  The credal predictions
    partition the instances into safe (determinate) and prior-dependent
    (indeterminate) groups.
    """
    from .decision import decide_point

    probs = np.asarray(bma_probs, dtype=np.float64)
    truth = np.asarray(truth)
    if not (len(probs) == len(cma_preds) == len(truth)):
        raise ValueError("inputs differ in length")
    n = len(truth)
    if n == 0:
        raise ValueError("empty input")

    point_classes = np.array([decide_point(p).predicted for p in probs])
    correct = point_classes == truth
    indet = np.array([not pred.determinate for pred in cma_preds])
    n_indet = int(indet.sum())

    disc = np.array([discounted_accuracy(pred, t) for pred, t in zip(cma_preds, truth)])

    safe_mask = ~indet
    acc_safe = float(correct[safe_mask].mean()) if safe_mask.any() else None
    acc_pd = float(correct[indet].mean()) if indet.any() else None

    tp = int(np.sum((point_classes == 1) & (truth == 1)))
    fp = int(np.sum((point_classes == 1) & (truth == 0)))
    tn = int(np.sum((point_classes == 0) & (truth == 0)))
    fn = int(np.sum((point_classes == 0) & (truth == 1)))

    return EvaluationReport(
        accuracy=float(correct.mean()),
        auc=auc(probs, truth),
        recall=recall(point_classes, truth),
        indeterminacy=n_indet / n,
        acc_safe=acc_safe,
        acc_prior_dependent=acc_pd,
        discounted_accuracy=float(disc.mean()),
        u65=float(np.mean([utility(x, "u65") for x in disc])),
        u80=float(np.mean([utility(x, "u80") for x in disc])),
        n_test=n,
        n_indeterminate=n_indet,
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
    )
