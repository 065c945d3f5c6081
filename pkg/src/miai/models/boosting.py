from __future__ import annotations

import numpy as np
from scipy.special import expit

from ._base import BinaryProbabilityClassifier, ModelKind
from ._cart import PackedTrees, build_tree


def _log_loss(y, margin):
    return float(np.mean(np.logaddexp(0.0, margin) - y * margin))


class GradientBoosting(BinaryProbabilityClassifier):
    """First-order gradient boosting of regression trees on log-loss.

    Each round fits a squared-error tree to the residuals ``y - p`` and adds
    ``learning_rate`` times its leaf means to the margin, starting from the
    training log-odds. Output is ``sigmoid(base_score + lr * sum(trees))``.

    Because each leaf steps along the mean residual of its rows and the log-loss
    curvature is at most 1/4, the training loss cannot increase for
    ``learning_rate < 8``; ``train_loss_`` records it per round.
    """

    kind = ModelKind.GRADIENT_BOOSTING
    requires_both_classes = True

    def __init__(self, n_estimators=100, learning_rate=0.1, max_depth=3, min_samples_leaf=5):
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf

    def _fit(self, X, y):
        rate = y.mean()
        self.base_score_ = float(np.log(rate / (1.0 - rate)))
        margin = np.full(X.shape[0], self.base_score_)
        trees, losses = [], [_log_loss(y, margin)]
        for _ in range(int(self.n_estimators)):
            residual = y - expit(margin)
            tree, _ = build_tree(
                X, residual, max_depth=self.max_depth, min_leaf=self.min_samples_leaf, criterion="mse"
            )
            margin = margin + self.learning_rate * tree.predict(X)
            trees.append(tree)
            losses.append(_log_loss(y, margin))
        self.trees_ = trees
        self.train_loss_ = np.asarray(losses)
        self._packed = PackedTrees.pack(trees)

    def decision_function(self, X):
        X = self._validate_rows(X)
        return self._margin(X)

    def _margin(self, X):
        if not self.trees_:
            return np.full(X.shape[0], self.base_score_)
        return self.base_score_ + self.learning_rate * self._packed.sum_predict(X)

    def _positive_proba(self, X):
        return expit(self._margin(X))
