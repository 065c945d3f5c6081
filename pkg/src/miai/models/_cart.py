"""Greedy CART construction shared by the tree, forest and boosting models."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

LEAF = -1


@dataclass
class Tree:
    """Flat binary tree; node 0 is the root. Rows with ``x[feature] <= threshold`` go left."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    weight: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    @property
    def is_leaf(self) -> np.ndarray:
        return self.feature == LEAF

    def used_features(self) -> np.ndarray:
        return np.unique(self.feature[self.feature != LEAF])

    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for node in range(self.n_nodes):
            if self.feature[node] != LEAF:
                depth[self.left[node]] = depth[node] + 1
                depth[self.right[node]] = depth[node] + 1
        return int(depth.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row."""
        X = np.asarray(X, dtype=np.float64)
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        active = self.feature[node] != LEAF
        while active.any():
            f = self.feature[node[active]]
            go_left = X[rows[active], f] <= self.threshold[node[active]]
            node[active] = np.where(go_left, self.left[node[active]], self.right[node[active]])
            active = self.feature[node] != LEAF
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "weight": self.weight.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(
            feature=np.asarray(d["feature"], dtype=np.int64),
            threshold=np.asarray(d["threshold"], dtype=np.float64),
            left=np.asarray(d["left"], dtype=np.int64),
            right=np.asarray(d["right"], dtype=np.int64),
            value=np.asarray(d["value"], dtype=np.float64),
            weight=np.asarray(d["weight"], dtype=np.float64),
        )

    def __eq__(self, other):
        if not isinstance(other, Tree):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, k), getattr(other, k))
            for k in ("feature", "threshold", "left", "right", "value", "weight")
        )


def _best_split_on_feature(x, target, w, min_leaf, criterion):
    """Return (score, threshold) of the best cut on one column, or (-inf, nan).

    Score is the child-side term of the impurity decrease: sum over children of
    ``(P^2 + N^2) / W`` for gini, ``S^2 / W`` for squared error. The first
    (lowest-threshold) maximiser wins ties.
    """
    order = np.argsort(x, kind="stable")
    xs = x[order]
    ws = w[order]
    cw = np.cumsum(ws)[:-1]
    total_w = ws.sum()
    distinct = xs[:-1] < xs[1:]
    ok = distinct & (cw >= min_leaf) & (total_w - cw >= min_leaf)
    if not ok.any():
        return -np.inf, np.nan
    wt = ws * target[order]
    cs = np.cumsum(wt)[:-1]
    total_s = wt.sum()
    wl = cw[ok]
    wr = total_w - wl
    sl = cs[ok]
    sr = total_s - sl
    if criterion == "gini":
        score = (sl**2 + (wl - sl) ** 2) / wl + (sr**2 + (wr - sr) ** 2) / wr
    else:
        score = sl**2 / wl + sr**2 / wr
    k = int(np.argmax(score))
    pos = np.flatnonzero(ok)[k]
    lo, hi = xs[pos], xs[pos + 1]
    thr = 0.5 * (lo + hi)
    if not lo <= thr < hi:
        thr = lo
    return float(score[k]), float(thr)


def build_tree(
    X: np.ndarray,
    target: np.ndarray,
    sample_weight: np.ndarray | None = None,
    *,
    max_depth: int,
    min_leaf: int,
    criterion: str = "gini",
    feature_sampler=None,
) -> tuple[Tree, np.ndarray]:
    """Grow a CART tree depth-first.

    ``criterion`` is ``"gini"`` (binary targets) or ``"mse"`` (real targets).
    Leaves store the weighted target mean. ``feature_sampler()`` may return the
    candidate columns for each split; features are scanned in increasing index
    order and a candidate replaces the incumbent only if strictly better, so
    ties resolve to the lowest feature then the lowest threshold.

    Returns the tree and the sorted union of candidate features considered.
    """
    X = np.asarray(X, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    n, m = X.shape
    w = np.ones(n) if sample_weight is None else np.asarray(sample_weight, dtype=np.float64)
    keep = w > 0
    X, target, w = X[keep], target[keep], w[keep]
    if X.shape[0] == 0:
        raise ValueError("cannot grow a tree on zero-weight data")

    feature, threshold, left, right, value, weight = [], [], [], [], [], []
    considered = set()

    def new_node(idx):
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        ww = w[idx]
        value.append(float(np.dot(ww, target[idx]) / ww.sum()))
        weight.append(float(ww.sum()))
        return len(feature) - 1

    root = new_node(np.arange(X.shape[0]))
    stack = [(root, np.arange(X.shape[0]), 0)]
    while stack:
        node, idx, depth = stack.pop()
        if depth >= max_depth or weight[node] < 2 * min_leaf:
            continue
        t, ww = target[idx], w[idx]
        s = float(np.dot(ww, t))
        W = weight[node]
        if criterion == "gini":
            parent = (s * s + (W - s) ** 2) / W
        else:
            parent = s * s / W
        if np.all(t == t[0]):
            continue
        cands = np.arange(m) if feature_sampler is None else np.sort(np.asarray(feature_sampler()))
        considered.update(int(c) for c in cands)
        best = (-np.inf, LEAF, np.nan)
        for f in cands:
            score, thr = _best_split_on_feature(X[idx, f], t, ww, min_leaf, criterion)
            if score > best[0]:
                best = (score, int(f), thr)
        score, f, thr = best
        if f == LEAF or not score - parent > 1e-12 * max(1.0, abs(parent)):
            continue
        go_left = X[idx, f] <= thr
        li, ri = idx[go_left], idx[~go_left]
        feature[node] = f
        threshold[node] = thr
        left[node] = new_node(li)
        right[node] = new_node(ri)
        # right pushed first so the left subtree is numbered first
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))

    tree = Tree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        value=np.asarray(value, dtype=np.float64),
        weight=np.asarray(weight, dtype=np.float64),
    )
    return tree, np.asarray(sorted(considered), dtype=np.int64)


@dataclass
class PackedTrees:
    """Several trees concatenated into shared arrays for compiled traversal."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    roots: np.ndarray

    @classmethod
    def pack(cls, trees) -> "PackedTrees":
        feats, thrs, lefts, rights, vals, roots = [], [], [], [], [], []
        offset = 0
        for t in trees:
            roots.append(offset)
            feats.append(t.feature)
            thrs.append(t.threshold)
            lefts.append(np.where(t.left == LEAF, LEAF, t.left + offset))
            rights.append(np.where(t.right == LEAF, LEAF, t.right + offset))
            vals.append(t.value)
            offset += t.n_nodes
        cat = lambda parts, dt: np.ascontiguousarray(np.concatenate(parts) if parts else np.zeros(0), dtype=dt)
        return cls(
            feature=cat(feats, np.int64),
            threshold=cat(thrs, np.float64),
            left=cat(lefts, np.int64),
            right=cat(rights, np.int64),
            value=cat(vals, np.float64),
            roots=np.asarray(roots, dtype=np.int64),
        )

    def sum_predict(self, X: np.ndarray) -> np.ndarray:
        """Per-row sum of leaf values over all packed trees."""
        X = np.ascontiguousarray(X, dtype=np.float64)
        out = np.empty(X.shape[0])
        _sum_trees(X, self.feature, self.threshold, self.left, self.right, self.value, self.roots, out)
        return out


@njit(cache=True)
def _sum_trees(X, feature, threshold, left, right, value, roots, out):
    for r in range(X.shape[0]):
        acc = 0.0
        for t in range(roots.shape[0]):
            node = roots[t]
            while feature[node] >= 0:
                if X[r, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            acc += value[node]
        out[r] = acc
