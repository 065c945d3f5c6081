"""The four default-risk classifiers behind one probability interface."""

from __future__ import annotations

import numpy as np

from ._base import ALL_KINDS, BinaryProbabilityClassifier, ModelKind, TrainConfig
from .boosting import GradientBoosting
from .forest import RandomForest
from .logistic import LogisticRegression
from .persistence import load_model, model_from_dict, model_to_dict, save_model
from .tree import DecisionTree

__all__ = [
    "ALL_KINDS", "BinaryProbabilityClassifier", "DecisionTree", "GradientBoosting",
    "LogisticRegression", "ModelKind", "RandomForest", "TrainConfig", "build_estimator",
    "load_model", "model_from_dict", "model_to_dict", "predict_batch", "predict_proba",
    "save_model", "train",
]


def build_estimator(kind, cfg: TrainConfig | None = None) -> BinaryProbabilityClassifier:
    """Unfitted estimator of ``kind`` configured from ``cfg``."""
    kind = ModelKind.parse(kind)
    cfg = cfg or TrainConfig()
    if kind is ModelKind.LOGISTIC_REGRESSION:
        return LogisticRegression(learning_rate=cfg.lr_learning_rate, n_epochs=cfg.lr_epochs)
    if kind is ModelKind.DECISION_TREE:
        return DecisionTree(max_depth=cfg.tree_max_depth, min_samples_leaf=cfg.tree_min_leaf)
    if kind is ModelKind.RANDOM_FOREST:
        return RandomForest(
            n_estimators=cfg.rf_n_trees, max_depth=cfg.tree_max_depth,
            min_samples_leaf=cfg.tree_min_leaf, max_features=cfg.rf_feature_fraction,
            bootstrap=cfg.rf_bootstrap, random_state=cfg.seed,
        )
    return GradientBoosting(
        n_estimators=cfg.gbt_n_rounds, learning_rate=cfg.gbt_learning_rate,
        max_depth=cfg.gbt_max_depth, min_samples_leaf=cfg.tree_min_leaf,
    )


def train(kind, train, cfg: TrainConfig | None = None, y=None) -> BinaryProbabilityClassifier:
    """Fit a model of ``kind`` on a :class:`~miai.dataset.Dataset` (or ``X`` plus ``y``)."""
    if y is None:
        X, y = train.X, train.y
    else:
        X = train
    model = build_estimator(kind, cfg).fit(X, y)
    model.train_config_ = cfg or TrainConfig()
    return model


def predict_proba(model, row) -> float:
    """P(default = 1) for a single feature row."""
    row = np.asarray(row, dtype=np.float64)
    if row.ndim != 1:
        raise ValueError(f"expected a single 1-d row, got shape {row.shape}")
    return float(_positive(model, row[None, :])[0])


def predict_batch(model, rows) -> np.ndarray:
    """Row-wise P(default = 1); an empty input gives an empty output."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.size == 0:
        return np.zeros(0)
    return _positive(model, np.atleast_2d(rows))


def _positive(model, X):
    if isinstance(model, BinaryProbabilityClassifier):
        return model.positive_proba(X)
    return np.asarray(model.predict_proba(X))[:, 1]
