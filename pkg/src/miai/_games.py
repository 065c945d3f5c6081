"""Interventional coalition games for Shapley attribution.

For an instance ``x`` and background rows ``B`` the value of a coalition ``S``
(a bitmask, bit ``j`` set when feature ``j`` is taken from ``x``) is

    v(S) = mean over b in B of f(x on S, b elsewhere)

:class:`GenericGame` evaluates this literally by building composite rows and
calling the model. The other games compute the same quantity for known model
families with compiled kernels, updating state incrementally as single
features enter or leave the coalition:

* :class:`LinearLogitGame` keeps one logit per background row.
* :class:`LeafGame` (trees averaged in probability space) decomposes the value
  over leaves: a leaf is reached iff ``x`` satisfies its path intervals on the
  features in ``S`` and ``b`` satisfies them on the rest, so the background
  part reduces to a per-leaf table of pass rates indexed by feature subset.
* :class:`TreeTableGame` (trees summed under a link, e.g. boosting) tabulates
  each tree's output for every background row and every subset of the
  tree's own features, then keeps one margin per background row.

All games expose ``value``, ``all_values`` (every coalition, via a Gray-code
walk) and ``permutation_marginals`` (prefix marginals along given orderings).
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .models import DecisionTree, GradientBoosting, LogisticRegression, RandomForest
from .models._cart import LEAF, PackedTrees

MAX_LEAF_FEATURES = 12
MAX_TABLE_ENTRIES = 8_000_000


def mask_to_bool(mask: int, n_features: int) -> np.ndarray:
    return ((int(mask) >> np.arange(n_features)) & 1).astype(bool)


def _feature_list(features, n_features) -> np.ndarray:
    if features is None:
        return np.arange(n_features, dtype=np.int64)
    return np.ascontiguousarray(features, dtype=np.int64)


class CoalitionGame:
    """``all_values(features)`` enumerates coalitions of ``features`` only.

    Entry ``k`` of the result is the coalition whose bit ``j`` of ``k``
    selects ``features[j]``; the remaining features are always absent.
    """

    n_features: int

    def active_features(self) -> np.ndarray:
        """Features the value function can depend on; the rest are dummies."""
        return np.arange(self.n_features)

    def value(self, mask: int) -> float:
        raise NotImplementedError

    def all_values(self, features=None) -> np.ndarray:
        raise NotImplementedError

    def permutation_marginals(self, perms: np.ndarray) -> np.ndarray:
        raise NotImplementedError


# -- generic ------------------------------------------------------------------


class GenericGame(CoalitionGame):
    """Literal evaluation through any ``predict(rows) -> P(default)`` callable."""

    def __init__(self, predict, x, background, max_rows=262_144):
        self.predict = predict
        self.x = np.asarray(x, dtype=np.float64)
        self.background = np.asarray(background, dtype=np.float64)
        self.n_features = self.x.size
        self.max_rows = max_rows

    def _values_for(self, inside: np.ndarray) -> np.ndarray:
        """Coalition values for a stack of boolean membership rows ``(c, M)``."""
        B = self.background.shape[0]
        out = np.empty(inside.shape[0])
        step = max(1, self.max_rows // B)
        for start in range(0, inside.shape[0], step):
            chunk = inside[start:start + step]
            rows = np.where(chunk[:, None, :], self.x, self.background[None, :, :])
            preds = np.asarray(self.predict(rows.reshape(-1, self.n_features)), dtype=np.float64)
            out[start:start + step] = preds.reshape(chunk.shape[0], B).mean(axis=1)
        return out

    def value(self, mask):
        return float(self._values_for(mask_to_bool(mask, self.n_features)[None, :])[0])

    def all_values(self, features=None):
        features = _feature_list(features, self.n_features)
        masks = np.arange(1 << features.size)
        inside = np.zeros((masks.size, self.n_features), dtype=bool)
        inside[:, features] = ((masks[:, None] >> np.arange(features.size)) & 1).astype(bool)
        return self._values_for(inside)

    def permutation_marginals(self, perms):
        perms = np.asarray(perms)
        P, M = perms.shape
        position = np.argsort(perms, axis=1)
        # prefix k holds the first k features of each ordering
        inside = position[:, None, :] < np.arange(M + 1)[None, :, None]
        vals = self._values_for(inside.reshape(-1, M)).reshape(P, M + 1)
        out = np.empty((P, M))
        np.put_along_axis(out, perms, np.diff(vals, axis=1), axis=1)
        return out


# -- compiled helpers -----------------------------------------------------------


@njit(cache=True)
def _sigmoid(t):
    if t >= 0.0:
        return 1.0 / (1.0 + np.exp(-t))
    e = np.exp(t)
    return e / (1.0 + e)


@njit(cache=True)
def _lowest_bit(k):
    i = 0
    while not (k >> i) & 1:
        i += 1
    return i


# -- logistic regression --------------------------------------------------------


@njit(cache=True)
def _linear_base(x, bg, coef, intercept):
    B, M = bg.shape
    margin = np.empty(B)
    delta = np.empty((M, B))
    for b in range(B):
        acc = intercept
        for j in range(M):
            acc += coef[j] * bg[b, j]
            delta[j, b] = coef[j] * (x[j] - bg[b, j])
        margin[b] = acc
    return margin, delta


@njit(cache=True)
def _mean_sigmoid(margin):
    s = 0.0
    for b in range(margin.shape[0]):
        s += _sigmoid(margin[b])
    return s / margin.shape[0]


@njit(cache=True)
def _linear_all_values(features, x, bg, coef, intercept):
    M = x.shape[0]
    F = features.shape[0]
    margin, delta = _linear_base(x, bg, coef, intercept)
    inside = np.zeros(M, dtype=np.bool_)
    out = np.empty(1 << F)
    out[0] = _mean_sigmoid(margin)
    for k in range(1, 1 << F):
        i = features[_lowest_bit(k)]
        sign = -1.0 if inside[i] else 1.0
        inside[i] = not inside[i]
        for b in range(margin.shape[0]):
            margin[b] += sign * delta[i, b]
        out[k ^ (k >> 1)] = _mean_sigmoid(margin)
    return out


@njit(cache=True)
def _linear_perm_marginals(perms, x, bg, coef, intercept):
    P, M = perms.shape
    margin0, delta = _linear_base(x, bg, coef, intercept)
    f0 = _mean_sigmoid(margin0)
    margin = np.empty_like(margin0)
    out = np.empty((P, M))
    for p in range(P):
        margin[:] = margin0
        prev = f0
        for k in range(M):
            i = perms[p, k]
            for b in range(margin.shape[0]):
                margin[b] += delta[i, b]
            cur = _mean_sigmoid(margin)
            out[p, i] = cur - prev
            prev = cur
    return out


class LinearLogitGame(CoalitionGame):
    def __init__(self, coef, intercept, x, background):
        self.coef = np.ascontiguousarray(coef, dtype=np.float64)
        self.intercept = float(intercept)
        self.x = np.ascontiguousarray(x, dtype=np.float64)
        self.background = np.ascontiguousarray(background, dtype=np.float64)
        self.n_features = self.x.size

    def value(self, mask):
        inside = mask_to_bool(mask, self.n_features)
        rows = np.where(inside, self.x, self.background)
        return float(np.mean([_sigmoid(t) for t in rows @ self.coef + self.intercept]))

    def active_features(self):
        return np.flatnonzero(self.coef != 0.0)

    def all_values(self, features=None):
        return _linear_all_values(
            _feature_list(features, self.n_features), self.x, self.background, self.coef, self.intercept
        )

    def permutation_marginals(self, perms):
        return _linear_perm_marginals(
            np.ascontiguousarray(perms, dtype=np.int64), self.x, self.background, self.coef, self.intercept
        )


# -- trees averaged in probability space ------------------------------------------


class LeafTables:
    """Per-(model, background) leaf decomposition shared by all instances."""

    def __init__(self, trees, weights, background, n_features):
        background = np.asarray(background, dtype=np.float64)
        B = background.shape[0]
        feats, lo, hi, val, feat_ptr, tab_ptr, tables = [], [], [], [], [0], [0], []
        for tree, w in zip(trees, weights):
            for leaf_val, intervals in _leaf_intervals(tree):
                fs = sorted(intervals)
                k = len(fs)
                sat = np.zeros(B, dtype=np.int64)
                for bit, f in enumerate(fs):
                    a, c = intervals[f]
                    ok = (background[:, f] > a) & (background[:, f] <= c)
                    sat |= ok.astype(np.int64) << bit
                    feats.append(f)
                    lo.append(a)
                    hi.append(c)
                cnt = np.bincount(sat, minlength=1 << k).astype(np.float64)
                # superset sums: cnt[T] = #b passing every interval in T
                for bit in range(k):
                    step = 1 << bit
                    idx = np.arange(1 << k)
                    low = idx[(idx & step) == 0]
                    cnt[low] += cnt[low | step]
                tables.append(cnt / B)
                val.append(leaf_val * w)
                feat_ptr.append(len(feats))
                tab_ptr.append(tab_ptr[-1] + (1 << k))
        self.n_features = n_features
        self.feat = np.asarray(feats, dtype=np.int64)
        self.lo = np.asarray(lo, dtype=np.float64)
        self.hi = np.asarray(hi, dtype=np.float64)
        self.val = np.asarray(val, dtype=np.float64)
        self.feat_ptr = np.asarray(feat_ptr, dtype=np.int64)
        self.tab_ptr = np.asarray(tab_ptr, dtype=np.int64)
        self.tables = np.concatenate(tables) if tables else np.zeros(0)
        n_leaves = self.val.size
        k = np.diff(self.feat_ptr)
        self.full = (np.int64(1) << k) - 1
        # feature -> (leaf, local bit) incidence, grouped by feature
        leaf_of = np.repeat(np.arange(n_leaves), k)
        bit_of = np.arange(self.feat.size) - np.repeat(self.feat_ptr[:-1], k)
        order = np.argsort(self.feat, kind="stable")
        self.inc_leaf = leaf_of[order].astype(np.int64)
        self.inc_bit = bit_of[order].astype(np.int64)
        self.inc_ptr = np.searchsorted(self.feat[order], np.arange(n_features + 1)).astype(np.int64)

    @property
    def max_leaf_features(self) -> int:
        return int(np.diff(self.feat_ptr).max(initial=0))

    def game(self, x) -> "LeafGame":
        return LeafGame(self, x)


def _leaf_intervals(tree):
    """Yield ``(leaf_value, {feature: (lo, hi)})``; a row reaches the leaf iff lo < x_f <= hi."""
    stack = [(0, {})]
    while stack:
        node, box = stack.pop()
        f = int(tree.feature[node])
        if f == LEAF:
            yield float(tree.value[node]), box
            continue
        thr = float(tree.threshold[node])
        a, c = box.get(f, (-np.inf, np.inf))
        left = dict(box)
        left[f] = (a, min(c, thr))
        right = dict(box)
        right[f] = (max(a, thr), c)
        stack.append((int(tree.right[node]), right))
        stack.append((int(tree.left[node]), left))


@njit(cache=True)
def _leaf_xok(x, feat, lo, hi, feat_ptr):
    n = feat_ptr.shape[0] - 1
    xok = np.zeros(n, dtype=np.int64)
    for l in range(n):
        m = 0
        for q in range(feat_ptr[l], feat_ptr[l + 1]):
            v = x[feat[q]]
            if v > lo[q] and v <= hi[q]:
                m |= 1 << (q - feat_ptr[l])
        xok[l] = m
    return xok


@njit(cache=True)
def _leaf_contrib(l, s, xok, full, val, tab_ptr, tables):
    if s & ~xok[l]:
        return 0.0
    return val[l] * tables[tab_ptr[l] + (full[l] ^ s)]


@njit(cache=True)
def _leaf_empty_value(xok, full, val, tab_ptr, tables):
    total = 0.0
    for l in range(val.shape[0]):
        total += _leaf_contrib(l, 0, xok, full, val, tab_ptr, tables)
    return total


@njit(cache=True)
def _leaf_all_values(features, M, xok, full, val, tab_ptr, tables, inc_ptr, inc_leaf, inc_bit):
    F = features.shape[0]
    state = np.zeros(val.shape[0], dtype=np.int64)
    inside = np.zeros(M, dtype=np.bool_)
    out = np.empty(1 << F)
    total = _leaf_empty_value(xok, full, val, tab_ptr, tables)
    out[0] = total
    for k in range(1, 1 << F):
        i = features[_lowest_bit(k)]
        adding = not inside[i]
        inside[i] = adding
        delta = 0.0
        for q in range(inc_ptr[i], inc_ptr[i + 1]):
            l = inc_leaf[q]
            s = state[l]
            old = _leaf_contrib(l, s, xok, full, val, tab_ptr, tables)
            if adding:
                s = s | (1 << inc_bit[q])
            else:
                s = s & ~(1 << inc_bit[q])
            state[l] = s
            delta += _leaf_contrib(l, s, xok, full, val, tab_ptr, tables) - old
        total += delta
        out[k ^ (k >> 1)] = total
    return out


@njit(cache=True)
def _leaf_perm_marginals(perms, xok, full, val, tab_ptr, tables, inc_ptr, inc_leaf, inc_bit):
    P, M = perms.shape
    state = np.zeros(val.shape[0], dtype=np.int64)
    out = np.empty((P, M))
    for p in range(P):
        state[:] = 0
        for k in range(M):
            i = perms[p, k]
            delta = 0.0
            for q in range(inc_ptr[i], inc_ptr[i + 1]):
                l = inc_leaf[q]
                s = state[l]
                old = _leaf_contrib(l, s, xok, full, val, tab_ptr, tables)
                s = s | (1 << inc_bit[q])
                state[l] = s
                delta += _leaf_contrib(l, s, xok, full, val, tab_ptr, tables) - old
            out[p, i] = delta
    return out


class LeafGame(CoalitionGame):
    def __init__(self, tables: LeafTables, x):
        self.t = tables
        self.n_features = tables.n_features
        self.x = np.ascontiguousarray(x, dtype=np.float64)
        self.xok = _leaf_xok(self.x, tables.feat, tables.lo, tables.hi, tables.feat_ptr)

    def _args(self):
        t = self.t
        return self.xok, t.full, t.val, t.tab_ptr, t.tables

    def value(self, mask):
        t = self.t
        total = 0.0
        for l in range(t.val.size):
            s = 0
            for q in range(t.feat_ptr[l], t.feat_ptr[l + 1]):
                if (int(mask) >> int(t.feat[q])) & 1:
                    s |= 1 << (q - int(t.feat_ptr[l]))
            total += _leaf_contrib(l, s, *self._args())
        return total

    def active_features(self):
        return np.flatnonzero(np.diff(self.t.inc_ptr) > 0)

    def all_values(self, features=None):
        t = self.t
        return _leaf_all_values(
            _feature_list(features, self.n_features), self.n_features, *self._args(),
            t.inc_ptr, t.inc_leaf, t.inc_bit,
        )

    def permutation_marginals(self, perms):
        t = self.t
        return _leaf_perm_marginals(
            np.ascontiguousarray(perms, dtype=np.int64), *self._args(), t.inc_ptr, t.inc_leaf, t.inc_bit
        )


# -- trees summed under a link ------------------------------------------------------


class TreeTables:
    """Per-(model, background) layout for :class:`TreeTableGame`.

    Output is ``link(base + scale * sum_t tree_t(row))`` with link identity or
    logistic.
    """

    def __init__(self, trees, base, scale, logistic, background, n_features):
        self.packed = PackedTrees.pack(trees)
        self.base = float(base)
        self.scale = float(scale)
        self.logistic = bool(logistic)
        self.background = np.ascontiguousarray(background, dtype=np.float64)
        self.n_features = n_features
        node_bit = np.full(self.packed.feature.size, -1, dtype=np.int64)
        width, tw_tree, tw_bit, tw_feat = [], [], [], []
        for t, tree in enumerate(trees):
            used = [int(f) for f in tree.used_features()]
            local = {f: b for b, f in enumerate(used)}
            start = self.packed.roots[t]
            for node in range(tree.n_nodes):
                if tree.feature[node] != LEAF:
                    node_bit[start + node] = local[int(tree.feature[node])]
            width.append(1 << len(used))
            for f, b in local.items():
                tw_tree.append(t)
                tw_bit.append(b)
                tw_feat.append(f)
        self.node_bit = node_bit
        self.width = np.asarray(width, dtype=np.int64)
        B = self.background.shape[0]
        self.offset = np.r_[0, np.cumsum(self.width * B)].astype(np.int64)
        order = np.argsort(np.asarray(tw_feat, dtype=np.int64), kind="stable")
        self.tw_tree = np.asarray(tw_tree, dtype=np.int64)[order]
        self.tw_bit = np.asarray(tw_bit, dtype=np.int64)[order]
        self.tw_ptr = np.searchsorted(np.asarray(tw_feat, dtype=np.int64)[order], np.arange(n_features + 1)).astype(np.int64)

    @property
    def n_entries(self) -> int:
        return int(self.offset[-1])

    def game(self, x) -> "TreeTableGame":
        return TreeTableGame(self, x)


@njit(cache=True)
def _build_tree_table(x, bg, feature, threshold, left, right, value, roots, node_bit, width, offset):
    B = bg.shape[0]
    tab = np.empty(offset[-1])
    for t in range(roots.shape[0]):
        for s in range(width[t]):
            base = offset[t] + s * B
            for b in range(B):
                node = roots[t]
                while feature[node] >= 0:
                    j = feature[node]
                    v = x[j] if (s >> node_bit[node]) & 1 else bg[b, j]
                    node = left[node] if v <= threshold[node] else right[node]
                tab[base + b] = value[node]
    return tab


@njit(cache=True)
def _link_mean(margin, logistic):
    s = 0.0
    for b in range(margin.shape[0]):
        s += _sigmoid(margin[b]) if logistic else margin[b]
    return s / margin.shape[0]


@njit(cache=True)
def _tree_initial(tab, offset, n_trees, B, base, scale):
    tv = np.empty((n_trees, B))
    margin = np.zeros(B)
    for t in range(n_trees):
        for b in range(B):
            tv[t, b] = tab[offset[t] + b]
            margin[b] += tv[t, b]
    for b in range(B):
        margin[b] = base + scale * margin[b]
    return tv, margin


@njit(cache=True)
def _tree_toggle(i, adding, local, tv, margin, tab, offset, tw_ptr, tw_tree, tw_bit, scale):
    B = margin.shape[0]
    for q in range(tw_ptr[i], tw_ptr[i + 1]):
        t = tw_tree[q]
        if adding:
            local[t] |= 1 << tw_bit[q]
        else:
            local[t] &= ~(1 << tw_bit[q])
        base = offset[t] + local[t] * B
        for b in range(B):
            nv = tab[base + b]
            d = nv - tv[t, b]
            if d != 0.0:
                tv[t, b] = nv
                margin[b] += scale * d


@njit(cache=True)
def _tree_all_values(features, M, tab, offset, tw_ptr, tw_tree, tw_bit, n_trees, B, base, scale, logistic):
    F = features.shape[0]
    tv, margin = _tree_initial(tab, offset, n_trees, B, base, scale)
    local = np.zeros(n_trees, dtype=np.int64)
    inside = np.zeros(M, dtype=np.bool_)
    out = np.empty(1 << F)
    out[0] = _link_mean(margin, logistic)
    for k in range(1, 1 << F):
        i = features[_lowest_bit(k)]
        adding = not inside[i]
        inside[i] = adding
        _tree_toggle(i, adding, local, tv, margin, tab, offset, tw_ptr, tw_tree, tw_bit, scale)
        out[k ^ (k >> 1)] = _link_mean(margin, logistic)
    return out


@njit(cache=True)
def _tree_perm_marginals(perms, tab, offset, tw_ptr, tw_tree, tw_bit, n_trees, B, base, scale, logistic):
    P, M = perms.shape
    tv0, margin0 = _tree_initial(tab, offset, n_trees, B, base, scale)
    f0 = _link_mean(margin0, logistic)
    tv = np.empty_like(tv0)
    margin = np.empty_like(margin0)
    local = np.zeros(n_trees, dtype=np.int64)
    out = np.empty((P, M))
    for p in range(P):
        tv[:, :] = tv0
        margin[:] = margin0
        local[:] = 0
        prev = f0
        for k in range(M):
            i = perms[p, k]
            _tree_toggle(i, True, local, tv, margin, tab, offset, tw_ptr, tw_tree, tw_bit, scale)
            cur = _link_mean(margin, logistic)
            out[p, i] = cur - prev
            prev = cur
    return out


class TreeTableGame(CoalitionGame):
    def __init__(self, tables: TreeTables, x):
        self.t = tables
        self.n_features = tables.n_features
        self.x = np.ascontiguousarray(x, dtype=np.float64)
        pk = tables.packed
        self.tab = _build_tree_table(
            self.x, tables.background, pk.feature, pk.threshold, pk.left, pk.right, pk.value,
            pk.roots, tables.node_bit, tables.width, tables.offset,
        )

    def _args(self):
        t = self.t
        return (
            self.tab, t.offset, t.tw_ptr, t.tw_tree, t.tw_bit, t.packed.roots.size,
            t.background.shape[0], t.base, t.scale, t.logistic,
        )

    def value(self, mask):
        rows = np.where(mask_to_bool(mask, self.n_features), self.x, self.t.background)
        m = self.t.base + self.t.scale * self.t.packed.sum_predict(rows)
        return float(np.mean([_sigmoid(v) for v in m]) if self.t.logistic else np.mean(m))

    def active_features(self):
        return np.flatnonzero(np.diff(self.t.tw_ptr) > 0)

    def all_values(self, features=None):
        return _tree_all_values(_feature_list(features, self.n_features), self.n_features, *self._args())

    def permutation_marginals(self, perms):
        return _tree_perm_marginals(np.ascontiguousarray(perms, dtype=np.int64), *self._args())


# -- dispatch -------------------------------------------------------------------------


class GenericFactory:
    def __init__(self, model, background):
        self.model = model
        self.background = np.asarray(background, dtype=np.float64)
        self.n_features = self.background.shape[1]

    def _predict(self, rows):
        from .models import predict_batch

        return predict_batch(self.model, rows)

    def game(self, x):
        return GenericGame(self._predict, x, self.background)


class LinearFactory:
    def __init__(self, model, background):
        self.coef = np.asarray(model.coef_, dtype=np.float64)
        self.intercept = float(model.intercept_)
        self.background = np.ascontiguousarray(background, dtype=np.float64)
        self.n_features = self.background.shape[1]

    def game(self, x):
        return LinearLogitGame(self.coef, self.intercept, x, self.background)


def prepare_games(model, background, fast: bool = True):
    """Precompute the per-(model, background) state; ``.game(x)`` then builds one instance's game."""
    background = np.ascontiguousarray(background, dtype=np.float64)
    if background.ndim != 2 or background.shape[0] == 0:
        raise ValueError("background must be a non-empty 2-d array of rows")
    M = background.shape[1]
    if not fast:
        return GenericFactory(model, background)
    if isinstance(model, LogisticRegression):
        return LinearFactory(model, background)
    if isinstance(model, (DecisionTree, RandomForest)):
        trees = model.trees_
        if max(t.depth() for t in trees) <= MAX_LEAF_FEATURES:
            return LeafTables(trees, [1.0 / len(trees)] * len(trees), background, M)
        tables = TreeTables(trees, 0.0, 1.0 / len(trees), False, background, M)
        if tables.n_entries <= MAX_TABLE_ENTRIES:
            return tables
    if isinstance(model, GradientBoosting):
        tables = TreeTables(model.trees_, model.base_score_, model.learning_rate, True, background, M)
        if tables.n_entries <= MAX_TABLE_ENTRIES:
            return tables
    return GenericFactory(model, background)
