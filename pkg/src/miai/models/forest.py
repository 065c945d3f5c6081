from __future__ import annotations

import numpy as np

from ._base import BinaryProbabilityClassifier, ModelKind
from ._cart import PackedTrees, build_tree


class RandomForest(BinaryProbabilityClassifier):
    """Bagged CART trees with a fresh random feature subset at every split.

    The forest outputs the mean of its trees' leaf probabilities (a score, not
    a majority vote). Each tree draws from its own child of
    ``SeedSequence(random_state)`` so the forest is reproducible.
    """

    kind = ModelKind.RANDOM_FOREST

    def __init__(self, n_estimators=100, max_depth=6, min_samples_leaf=5,
                 max_features=0.5, bootstrap=True, random_state=0):
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.random_state = random_state

    def _fit(self, X, y):
        n, m = X.shape
        k = max(1, int(np.floor(self.max_features * m + 0.5)))
        children = np.random.SeedSequence(self.random_state).spawn(self.n_estimators)
        trees, subsets = [], []
        for child in children:
            rng = np.random.default_rng(child)
            if self.bootstrap:
                weight = np.bincount(rng.integers(0, n, n), minlength=n).astype(np.float64)
            else:
                weight = np.ones(n)
            if k >= m:
                sampler = None
            else:
                sampler = lambda rng=rng: rng.choice(m, size=k, replace=False)
            tree, considered = build_tree(
                X, y, weight, max_depth=self.max_depth, min_leaf=self.min_samples_leaf,
                criterion="gini", feature_sampler=sampler,
            )
            trees.append(tree)
            subsets.append(considered)
        self.trees_ = trees
        # union of the candidate columns drawn for each tree's splits
        self.feature_subsets_ = subsets
        self._packed = PackedTrees.pack(trees)

    def tree_probas(self, X):
        """Leaf probability of every member tree, shape ``(n, n_estimators)``."""
        X = self._validate_rows(X)
        return np.column_stack([t.predict(X) for t in self.trees_])

    def _positive_proba(self, X):
        return self._packed.sum_predict(X) / len(self.trees_)
