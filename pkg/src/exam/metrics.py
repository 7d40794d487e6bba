"""Evaluation metrics: accuracy, rank-weighted precision, recall@5, F1.

The F1 here is deliberately the printed competition formula
P*R / (P + R) -- half the conventional harmonic mean -- so reported
magnitudes (precision can exceed 1 under the rank weighting) stay
consistent. Dataset-level precision and recall are means over instances,
combined afterwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import UndefinedMetricError

TOP_K = 5


@dataclass(frozen=True)
class RankedPrediction:
    """Top-5 predicted class ids (descending score, ties by ascending id)
    together with the true label set."""

    top5: tuple[int, ...]
    truth: frozenset

    def __post_init__(self):
        if len(self.top5) != TOP_K or len(set(self.top5)) != TOP_K:
            raise ValueError(f"top5 must hold {TOP_K} distinct ids: {self.top5}")


def top_k_from_scores(scores: Sequence[float], k: int = TOP_K) -> tuple[int, ...]:
    """Highest-scoring k class ids; score ties broken by ascending id."""
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    if scores.size < k:
        raise UndefinedMetricError(
            f"need at least {k} classes for top-{k}, got {scores.size}"
        )
    order = np.lexsort((np.arange(scores.size), -scores))
    return tuple(int(i) for i in order[:k])


def accuracy(predictions: Sequence[int], truths: Sequence[int]) -> float:
    """Exact-match fraction."""
    if len(predictions) != len(truths):
        raise ValueError("predictions and truths differ in length")
    if not predictions:
        raise UndefinedMetricError("accuracy of an empty prediction list")
    hits = sum(int(p == t) for p, t in zip(predictions, truths))
    return hits / len(predictions)


def _log(x: float, base: str) -> float:
    return math.log2(x) if base == "2" else math.log(x)


def weighted_precision(pred: RankedPrediction, log_base: str = "e") -> float:
    """Rank-discounted precision: sum over positions 1..5 of
    Precision@pos / log(pos + 1)."""
    score = 0.0
    hits = 0
    for pos, cls in enumerate(pred.top5, start=1):
        if cls in pred.truth:
            hits += 1
        score += (hits / pos) / _log(pos + 1, log_base)
    return score


def recall_at_5(pred: RankedPrediction) -> float:
    """Fraction of the true labels retrieved in the top 5."""
    if not pred.truth:
        raise UndefinedMetricError("recall@5 with an empty truth set")
    return len(set(pred.top5) & pred.truth) / len(pred.truth)


def f1(precision: float, recall5: float) -> float:
    """The printed competition formula P*R/(P+R); 0 when both are 0."""
    if precision == 0.0 and recall5 == 0.0:
        return 0.0
    return precision * recall5 / (precision + recall5)


@dataclass
class EvalSummary:
    task: str
    count: int
    accuracy: Optional[float] = None
    precision: Optional[float] = None
    recall5: Optional[float] = None
    f1: Optional[float] = None

    @property
    def primary_metric(self) -> float:
        return self.accuracy if self.accuracy is not None else self.f1

    def to_json_dict(self) -> dict:
        out: dict = {"task": self.task, "count": self.count}
        if self.accuracy is not None:
            out["accuracy"] = round(self.accuracy, 6)
        else:
            out["precision"] = round(self.precision, 6)
            out["recall_at_5"] = round(self.recall5, 6)
            out["f1"] = round(self.f1, 6)
        return out


def evaluate_multiclass(predictions: Sequence[int],
                        truths: Sequence[int]) -> EvalSummary:
    return EvalSummary(task="multiclass", count=len(predictions),
                       accuracy=accuracy(predictions, truths))


def evaluate_multilabel(preds: Sequence[RankedPrediction],
                        log_base: str = "e") -> EvalSummary:
    if not preds:
        raise UndefinedMetricError("evaluation of an empty prediction list")
    p = float(np.mean([weighted_precision(x, log_base) for x in preds]))
    r = float(np.mean([recall_at_5(x) for x in preds]))
    return EvalSummary(task="multilabel", count=len(preds),
                       precision=p, recall5=r, f1=f1(p, r))
