from __future__ import annotations

import numpy as np
from scipy.special import expit

from ._base import BinaryProbabilityClassifier, ModelKind


def linear_margin(X, coef, intercept):
    """``X @ coef + intercept`` accumulated column by column.

    Each row's result depends only on that row, unlike a BLAS product whose
    rounding can vary with the row's position in the batch.
    """
    z = np.full(X.shape[0], float(intercept))
    for j in range(X.shape[1]):
        z += X[:, j] * coef[j]
    return z


def log_loss_and_grad(coef, intercept, X, y):
    """Mean log-loss and its gradient with respect to ``(coef, intercept)``."""
    z = X @ coef + intercept
    p = expit(z)
    # log(1 + e^z) - y z, computed without overflow
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    r = p - y
    return loss, X.T @ r / X.shape[0], float(r.mean())


class LogisticRegression(BinaryProbabilityClassifier):
    """Logistic regression fit by full-batch gradient descent on mean log-loss.

    Weights start at zero and the intercept at the log-odds of the training
    positive rate, so the first step starts from the base rate.
    """

    kind = ModelKind.LOGISTIC_REGRESSION
    requires_both_classes = True

    def __init__(self, learning_rate=0.1, n_epochs=500):
        self.learning_rate = learning_rate
        self.n_epochs = n_epochs

    def _fit(self, X, y):
        rate = y.mean()
        coef = np.zeros(X.shape[1])
        intercept = float(np.log(rate / (1.0 - rate)))
        losses = []
        for _ in range(int(self.n_epochs)):
            loss, g_coef, g_int = log_loss_and_grad(coef, intercept, X, y)
            losses.append(loss)
            coef = coef - self.learning_rate * g_coef
            intercept = intercept - self.learning_rate * g_int
        self.coef_ = coef
        self.intercept_ = intercept
        self.train_loss_ = np.asarray(losses)

    def decision_function(self, X):
        X = self._validate_rows(X)
        return linear_margin(X, self.coef_, self.intercept_)

    def _positive_proba(self, X):
        return expit(linear_margin(X, self.coef_, self.intercept_))
