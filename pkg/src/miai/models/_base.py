from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from enum import Enum

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted


class ModelKind(str, Enum):
    LOGISTIC_REGRESSION = "LR"
    DECISION_TREE = "DT"
    RANDOM_FOREST = "RF"
    GRADIENT_BOOSTING = "GBT"

    @property
    def title(self) -> str:
        return _TITLES[self]

    @classmethod
    def parse(cls, name) -> "ModelKind":
        if isinstance(name, ModelKind):
            return name
        key = str(name).strip().lower().replace("_", "").replace("-", "").replace(" ", "")
        try:
            return _ALIASES[key]
        except KeyError:
            raise ValueError(f"unknown model kind {name!r}; expected one of LR, DT, RF, GBT") from None


_TITLES = {
    ModelKind.LOGISTIC_REGRESSION: "LogisticRegression",
    ModelKind.DECISION_TREE: "DecisionTree",
    ModelKind.RANDOM_FOREST: "RandomForest",
    ModelKind.GRADIENT_BOOSTING: "GradientBoosting",
}
_ALIASES = {}
for _k, _t in _TITLES.items():
    _ALIASES[_k.value.lower()] = _k
    _ALIASES[_t.lower()] = _k
_ALIASES["xgboost"] = ModelKind.GRADIENT_BOOSTING
_ALIASES["gbm"] = ModelKind.GRADIENT_BOOSTING

ALL_KINDS: tuple[ModelKind, ...] = tuple(ModelKind)


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for all four model kinds."""

    seed: int = 0
    lr_learning_rate: float = 0.1
    lr_epochs: int = 500
    tree_max_depth: int = 6
    tree_min_leaf: int = 5
    rf_n_trees: int = 100
    rf_feature_fraction: float = 0.5
    rf_bootstrap: bool = True
    gbt_n_rounds: int = 100
    gbt_learning_rate: float = 0.1
    gbt_max_depth: int = 3

    def __post_init__(self):
        for name in ("lr_epochs", "tree_max_depth", "tree_min_leaf", "rf_n_trees", "gbt_max_depth"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be positive")
        if self.gbt_n_rounds < 0:
            raise ValueError("gbt_n_rounds must be non-negative")
        for name in ("lr_learning_rate", "rf_feature_fraction", "gbt_learning_rate"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must be in (0, 1], got {v}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown TrainConfig keys: {sorted(unknown)}")
        return cls(**d)


class BinaryProbabilityClassifier(ClassifierMixin, BaseEstimator):
    """Shared validation for the default/no-default classifiers.

    Subclasses implement ``_fit(X, y)`` and ``_positive_proba(X)``.
    """

    kind: ModelKind
    requires_both_classes = False

    def fit(self, X, y):
        X = check_array(X, dtype=np.float64)
        y = np.asarray(y)
        if X.shape[0] == 0:
            raise ValueError("cannot train on an empty dataset")
        if y.shape != (X.shape[0],):
            raise ValueError(f"{X.shape[0]} rows but labels of shape {y.shape}")
        if not np.all((y == 0) | (y == 1)):
            raise ValueError("labels must be 0 or 1")
        y = y.astype(np.float64)
        if self.requires_both_classes and np.unique(y).size < 2:
            raise ValueError(f"{type(self).__name__} needs both classes in the training labels")
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = X.shape[1]
        self._fit(X, y)
        return self

    def _validate_rows(self, X) -> np.ndarray:
        check_is_fitted(self, "n_features_in_")
        X = check_array(X, dtype=np.float64, ensure_min_samples=0)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected rows with {self.n_features_in_} features, got {X.shape[1]}")
        return X

    def positive_proba(self, X) -> np.ndarray:
        """P(default = 1) for each row, shape ``(n,)``."""
        X = self._validate_rows(X)
        if X.shape[0] == 0:
            return np.zeros(0)
        return self._positive_proba(X)

    def predict_proba(self, X) -> np.ndarray:
        p = self.positive_proba(X)
        return np.column_stack([1.0 - p, p])

    def predict(self, X) -> np.ndarray:
        return (self.positive_proba(X) >= 0.5).astype(np.int64)

    def _fit(self, X, y):
        raise NotImplementedError

    def _positive_proba(self, X):
        raise NotImplementedError
