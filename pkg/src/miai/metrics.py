"""ROC curves and AUC."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class UndefinedAUCError(ValueError):
    """Raised when one of the two classes is absent."""


@dataclass(frozen=True)
class RocResult:
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))

    def to_csv(self, path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["fpr", "tpr"])
            for f, t in self.points:
                writer.writerow([repr(f), repr(t)])


def roc_auc(scores, labels) -> RocResult:
    """ROC curve with one vertex per distinct score, and its trapezoidal area.

    Tied scores move the curve diagonally, which credits each tied
    positive/negative pair with one half, so the area equals the Mann-Whitney
    probability ``P(s+ > s-) + 0.5 P(s+ = s-)``.
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    if scores.shape != labels.shape:
        raise ValueError(f"{scores.size} scores but {labels.size} labels")
    if not np.all((labels == 0) | (labels == 1)):
        raise ValueError("labels must be 0 or 1")
    n_pos = int(np.sum(labels == 1))
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedAUCError("AUC is undefined unless both classes are present")

    order = np.argsort(-scores, kind="stable")
    s, y = scores[order], labels[order]
    last_of_group = np.r_[s[1:] != s[:-1], True]
    tp = np.r_[0, np.cumsum(y == 1)[last_of_group]]
    fp = np.r_[0, np.cumsum(y == 0)[last_of_group]]
    # exact integer area, divided once
    twice_area = int(np.sum(np.diff(fp) * (tp[1:] + tp[:-1])))
    auc = twice_area / (2.0 * n_pos * n_neg)
    return RocResult(fpr=fp / n_neg, tpr=tp / n_pos, auc=auc)


def trapezoid_area(fpr, tpr) -> float:
    fpr, tpr = np.asarray(fpr, dtype=np.float64), np.asarray(tpr, dtype=np.float64)
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
