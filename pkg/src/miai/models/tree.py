from __future__ import annotations

from ._base import BinaryProbabilityClassifier, ModelKind
from ._cart import PackedTrees, build_tree


class DecisionTree(BinaryProbabilityClassifier):
    """CART classifier: greedy Gini splits, stopped by depth and minimum leaf size.

    Leaves hold the fraction of defaults among the training rows routed there.
    """

    kind = ModelKind.DECISION_TREE

    def __init__(self, max_depth=6, min_samples_leaf=5):
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf

    def _fit(self, X, y):
        self.tree_, _ = build_tree(
            X, y, max_depth=self.max_depth, min_leaf=self.min_samples_leaf, criterion="gini"
        )
        self._packed = PackedTrees.pack([self.tree_])

    @property
    def trees_(self):
        return [self.tree_]

    def apply(self, X):
        return self.tree_.apply(self._validate_rows(X))

    def _positive_proba(self, X):
        return self._packed.sum_predict(X)
