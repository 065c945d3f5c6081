"""Versioned JSON documents for trained models."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ._base import ModelKind, TrainConfig
from ._cart import PackedTrees, Tree

FORMAT = "miai.model"
FORMAT_VERSION = 1


def model_to_dict(model) -> dict:
    from . import DecisionTree, GradientBoosting, LogisticRegression, RandomForest

    doc = {
        "format": FORMAT,
        "version": FORMAT_VERSION,
        "kind": model.kind.value,
        "config": model.get_params(),
        "train_config": getattr(model, "train_config_", None) and model.train_config_.to_dict(),
        "n_features": int(model.n_features_in_),
    }
    if isinstance(model, LogisticRegression):
        params = {"coef": model.coef_.tolist(), "intercept": model.intercept_}
    elif isinstance(model, DecisionTree):
        params = {"tree": model.tree_.to_dict()}
    elif isinstance(model, RandomForest):
        params = {
            "trees": [t.to_dict() for t in model.trees_],
            "feature_subsets": [s.tolist() for s in model.feature_subsets_],
        }
    elif isinstance(model, GradientBoosting):
        params = {
            "base_score": model.base_score_,
            "learning_rate": model.learning_rate,
            "trees": [t.to_dict() for t in model.trees_],
        }
    else:
        raise TypeError(f"cannot serialise {type(model).__name__}")
    doc["params"] = params
    return doc


def model_from_dict(doc: dict):
    from . import DecisionTree, GradientBoosting, LogisticRegression, RandomForest

    if doc.get("format") != FORMAT:
        raise ValueError(f"not a model document (format={doc.get('format')!r})")
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model document version {doc.get('version')!r}")
    kind = ModelKind.parse(doc["kind"])
    cls = {
        ModelKind.LOGISTIC_REGRESSION: LogisticRegression,
        ModelKind.DECISION_TREE: DecisionTree,
        ModelKind.RANDOM_FOREST: RandomForest,
        ModelKind.GRADIENT_BOOSTING: GradientBoosting,
    }[kind]
    model = cls(**doc["config"])
    p = doc["params"]
    model.classes_ = np.array([0, 1])
    model.n_features_in_ = int(doc["n_features"])
    if doc.get("train_config"):
        model.train_config_ = TrainConfig.from_dict(doc["train_config"])
    if kind is ModelKind.LOGISTIC_REGRESSION:
        model.coef_ = np.asarray(p["coef"], dtype=np.float64)
        model.intercept_ = float(p["intercept"])
    elif kind is ModelKind.DECISION_TREE:
        model.tree_ = Tree.from_dict(p["tree"])
        model._packed = PackedTrees.pack([model.tree_])
    elif kind is ModelKind.RANDOM_FOREST:
        model.trees_ = [Tree.from_dict(t) for t in p["trees"]]
        model.feature_subsets_ = [np.asarray(s, dtype=np.int64) for s in p["feature_subsets"]]
        model._packed = PackedTrees.pack(model.trees_)
    else:
        model.base_score_ = float(p["base_score"])
        model.trees_ = [Tree.from_dict(t) for t in p["trees"]]
        model._packed = PackedTrees.pack(model.trees_)
    return model


def save_model(model, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1) + "\n", encoding="utf-8")


def load_model(path):
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
