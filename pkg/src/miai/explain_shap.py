"""Shapley-value attributions with an interventional (background-sample) value function."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._games import GenericGame, prepare_games
from ._parallel import instance_rng, map_instances
from .attribution import AttributionVector, Method, average
from .dataset import Dataset
from .models import predict_batch

MAX_EXACT_FEATURES = 20


class ShapMode(str, Enum):
    EXACT = "exact"
    SAMPLING = "sampling"


class EnumerationLimitError(ValueError):
    pass


@dataclass(frozen=True)
class ShapConfig:
    """Settings for one Shapley run.

    ``background`` is the reference sample that stands in for absent
    features; :func:`select_background` draws it from training rows.
    """

    mode: ShapMode = ShapMode.SAMPLING
    background: np.ndarray | None = None
    max_background: int = 100
    n_permutations: int = 2000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mode", ShapMode(self.mode))
        if self.max_background < 1:
            raise ValueError("max_background must be positive")
        if self.n_permutations < 1:
            raise ValueError("n_permutations must be at least 1")
        if self.background is not None:
            bg = np.array(self.background, dtype=np.float64)
            if bg.ndim != 2 or bg.shape[0] == 0:
                raise ValueError("background must be a non-empty list of rows")
            bg.flags.writeable = False
            object.__setattr__(self, "background", bg)

    def require_background(self) -> np.ndarray:
        if self.background is None or len(self.background) == 0:
            raise ValueError("ShapConfig.background is empty; call select_background first")
        return self.background

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "max_background": self.max_background,
            "n_permutations": self.n_permutations,
            "seed": self.seed,
            "n_background": None if self.background is None else int(self.background.shape[0]),
        }


def select_background(X, max_background: int = 100, seed: int = 0) -> np.ndarray:
    """Uniform subsample of ``X`` without replacement, capped at ``max_background`` rows."""
    X = X.X if isinstance(X, Dataset) else np.asarray(X, dtype=np.float64)
    if X.shape[0] == 0:
        raise ValueError("cannot draw a background sample from zero rows")
    if X.shape[0] <= max_background:
        return X.copy()
    idx = np.sort(np.random.default_rng(seed).choice(X.shape[0], size=max_background, replace=False))
    return X[idx]


def _as_mask(subset, n_features) -> int:
    if isinstance(subset, (int, np.integer)):
        return int(subset)
    arr = np.asarray(subset)
    if arr.dtype == bool:
        return int(np.sum(1 << np.flatnonzero(arr)))
    return int(sum(1 << int(j) for j in set(arr.tolist())))


def coalition_value(model, x, subset, background) -> float:
    """Mean prediction over background rows with the ``subset`` features copied from ``x``.

    ``subset`` is a bitmask, an iterable of feature indices or a boolean mask.
    """
    background = np.asarray(background, dtype=np.float64)
    if background.ndim != 2 or background.shape[0] == 0:
        raise ValueError("coalition_value needs a non-empty background sample")
    x = np.asarray(x, dtype=np.float64)
    game = GenericGame(lambda rows: predict_batch(model, rows), x, background)
    return game.value(_as_mask(subset, x.size))


def shapley_weights(n_features: int) -> np.ndarray:
    """``|S|! (M - |S| - 1)! / M!`` for ``|S| = 0 .. M-1``."""
    M = n_features
    return np.array(
        [math.factorial(s) * math.factorial(M - s - 1) / math.factorial(M) for s in range(M)]
    )


def shapley_from_values(values: np.ndarray, n_features: int) -> np.ndarray:
    """Shapley values by full enumeration over a table of all ``2^M`` coalition values."""
    M = n_features
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (1 << M,):
        raise ValueError(f"expected {1 << M} coalition values, got {values.shape}")
    masks = np.arange(1 << M)
    size = np.zeros(1 << M, dtype=np.int64)
    for j in range(M):
        size += (masks >> j) & 1
    w = shapley_weights(M)
    phi = np.empty(M)
    for i in range(M):
        without = masks[((masks >> i) & 1) == 0]
        phi[i] = np.dot(w[size[without]], values[without | (1 << i)] - values[without])
    return phi


def _kind(model):
    return getattr(model, "kind", None)


def _games_for(model, cfg, games):
    return games if games is not None else prepare_games(model, cfg.require_background())


def shapley_exact(model, x, cfg: ShapConfig, games=None) -> AttributionVector:
    """Exact Shapley values: every coalition value computed once, then weighted sums.

    Features the model provably ignores are dummies with value exactly 0, so
    enumeration runs over the remaining ones only.
    """
    x = np.asarray(x, dtype=np.float64)
    M = x.size
    if M > MAX_EXACT_FEATURES:
        raise EnumerationLimitError(
            f"exact enumeration is limited to {MAX_EXACT_FEATURES} features (got {M}); use sampling mode"
        )
    game = _games_for(model, cfg, games).game(x)
    active = np.asarray(game.active_features(), dtype=np.int64)
    values = game.all_values(active)
    phi = np.zeros(M)
    phi[active] = shapley_from_values(values, active.size)
    return AttributionVector(Method.SHAP, _kind(model), values[0], phi)


@dataclass(frozen=True)
class SamplingResult:
    attribution: AttributionVector
    marginals: np.ndarray  # (n_permutations, M): one marginal-contribution vector per ordering
    full_value: float

    @property
    def standard_error(self) -> np.ndarray:
        P = self.marginals.shape[0]
        if P < 2:
            return np.full(self.marginals.shape[1], np.nan)
        return self.marginals.std(axis=0, ddof=1) / math.sqrt(P)


def random_orderings(rng: np.random.Generator, n_permutations: int, n_features: int) -> np.ndarray:
    return rng.permuted(np.tile(np.arange(n_features), (n_permutations, 1)), axis=1)


def shapley_sampling_detailed(model, x, cfg: ShapConfig, index: int = 0, games=None) -> SamplingResult:
    x = np.asarray(x, dtype=np.float64)
    game = _games_for(model, cfg, games).game(x)
    perms = random_orderings(instance_rng(cfg.seed, index), cfg.n_permutations, x.size)
    marginals = game.permutation_marginals(perms)
    base = game.value(0)
    phi = marginals.mean(axis=0)
    full = base + float(marginals[0].sum())
    return SamplingResult(AttributionVector(Method.SHAP, _kind(model), base, phi), marginals, full)


def shapley_sampling(model, x, cfg: ShapConfig, index: int = 0, games=None) -> AttributionVector:
    """Monte-Carlo Shapley values from ``cfg.n_permutations`` uniform feature orderings.

    Orderings come from a generator seeded by ``(cfg.seed, index)``.
    """
    return shapley_sampling_detailed(model, x, cfg, index, games).attribution


def explain_instance(model, x, cfg: ShapConfig, index: int = 0, games=None) -> AttributionVector:
    if cfg.mode is ShapMode.EXACT:
        return shapley_exact(model, x, cfg, games)
    return shapley_sampling(model, x, cfg, index, games)


def _explain_chunk(indices, model, X, cfg, games):
    return [explain_instance(model, X[i], cfg, int(i), games) for i in indices]


def explain_all(model, X, cfg: ShapConfig, n_jobs: int = 1, games=None) -> list[AttributionVector]:
    X = np.asarray(X, dtype=np.float64)
    games = _games_for(model, cfg, games)
    return map_instances(_explain_chunk, X.shape[0], n_jobs, model, X, cfg, games)


def mean_attribution(model, test, cfg: ShapConfig, n_jobs: int = 1, games=None) -> AttributionVector:
    """Signed per-feature mean of per-instance Shapley values over ``test``."""
    X = test.X if isinstance(test, Dataset) else np.asarray(test, dtype=np.float64)
    if X.shape[0] == 0:
        raise ValueError("cannot average attributions over an empty test set")
    names = test.feature_names if isinstance(test, Dataset) else None
    return average(explain_all(model, X, cfg, n_jobs, games), Method.SHAP, _kind(model), names)


class ShapExplainer(TransformerMixin, BaseEstimator):
    """Estimator-style wrapper: ``fit`` draws the background, ``transform`` returns Shapley values.

    >>> explainer = ShapExplainer(model).fit(X_train)        # doctest: +SKIP
    >>> phi = explainer.transform(X_test)                     # (n, M)  # doctest: +SKIP
    """

    def __init__(self, model, mode="sampling", max_background=100, n_permutations=2000,
                 random_state=0, n_jobs=1, fast=True):
        self.model = model
        self.mode = mode
        self.max_background = max_background
        self.n_permutations = n_permutations
        self.random_state = random_state
        self.n_jobs = n_jobs
        self.fast = fast

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        background = select_background(X, self.max_background, self.random_state)
        self.config_ = ShapConfig(
            mode=self.mode, background=background, max_background=self.max_background,
            n_permutations=self.n_permutations, seed=self.random_state,
        )
        self.games_ = prepare_games(self.model, background, fast=self.fast)
        self.n_features_in_ = X.shape[1]
        return self

    def explain(self, X) -> list[AttributionVector]:
        check_is_fitted(self, "config_")
        X = check_array(X, dtype=np.float64)
        return explain_all(self.model, X, self.config_, self.n_jobs, self.games_)

    def transform(self, X):
        return np.stack([v.contributions for v in self.explain(X)])

    def mean_attribution(self, X) -> AttributionVector:
        return average(self.explain(X), Method.SHAP, _kind(self.model))
