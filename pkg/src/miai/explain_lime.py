"""Local linear surrogates fitted on Gaussian perturbations around an instance."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._parallel import instance_rng, map_instances
from .attribution import AttributionVector, Method, average
from .dataset import Dataset, Standardizer, fit_standardizer
from .models import predict_batch


class KernelWidthError(ValueError):
    """The proximity kernel left (almost) no weight on the perturbation sample."""


@dataclass(frozen=True)
class LimeConfig:
    """Surrogate settings.

    ``kernel_width=None`` means ``0.75 * sqrt(M)`` and ``k_features=None``
    keeps every feature.
    """

    n_samples: int = 5000
    kernel_width: float | None = None
    ridge_lambda: float = 1e-3
    k_features: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 100:
            raise ValueError(f"n_samples must be at least 100, got {self.n_samples}")
        if self.kernel_width is not None and not self.kernel_width > 0:
            raise ValueError("kernel_width must be positive")
        if self.ridge_lambda < 0:
            raise ValueError("ridge_lambda must be non-negative")
        if self.k_features is not None and self.k_features < 1:
            raise ValueError("k_features must be at least 1")

    def width_for(self, n_features: int) -> float:
        return self.kernel_width if self.kernel_width is not None else 0.75 * math.sqrt(n_features)

    def features_for(self, n_features: int) -> int:
        k = n_features if self.k_features is None else self.k_features
        if not 1 <= k <= n_features:
            raise ValueError(f"k_features must be in [1, {n_features}], got {k}")
        return k

    def to_dict(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "kernel_width": self.kernel_width,
            "ridge_lambda": self.ridge_lambda,
            "k_features": self.k_features,
            "seed": self.seed,
        }


def _draw(x_std: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    return x_std + rng.standard_normal((n, x_std.size))


def perturb_instance(x, std: Standardizer, n: int, seed: int | np.random.Generator = 0) -> np.ndarray:
    """``n`` raw-space rows drawn as ``x`` plus unit Gaussian noise in standardized space."""
    if n < 1:
        raise ValueError(f"need at least one perturbation, got n={n}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    x_std = std.transform(np.atleast_2d(x))[0]
    return std.inverse_transform(_draw(x_std, n, rng))


def proximity_weight(x, z, std: Standardizer, width: float):
    """``exp(-d^2 / width^2)`` with ``d`` the standardized Euclidean distance; ``z`` may be a row or rows."""
    if not width > 0:
        raise ValueError("kernel width must be positive")
    z = np.asarray(z, dtype=np.float64)
    d2 = np.sum((std.transform(np.atleast_2d(z)) - std.transform(np.atleast_2d(x))) ** 2, axis=1)
    w = np.exp(-d2 / width**2)
    return float(w[0]) if z.ndim == 1 else w


@dataclass(frozen=True)
class LocalSurrogate:
    """Weighted ridge fit of the black box around one instance.

    Coefficients are per standardized unit; ``selected`` marks the features
    kept by the top-k step (the others are exactly zero).
    """

    coef: np.ndarray
    intercept: float
    r2: float
    stderr: np.ndarray
    selected: np.ndarray
    effective_n: float


def _weighted_ridge(Z, y, w, lam):
    zbar = w @ Z
    ybar = float(w @ y)
    Zc = Z - zbar
    A = Zc.T @ (Zc * w[:, None])
    A[np.diag_indices_from(A)] += lam
    coef = np.linalg.solve(A, Zc.T @ (w * (y - ybar)))
    return coef, ybar - float(zbar @ coef), A


def fit_surrogate(Z, y, weights, ridge_lambda: float = 1e-3, k_features: int | None = None) -> LocalSurrogate:
    """Weighted ridge regression of ``y`` on ``Z`` with an unpenalised intercept.

    Weights are normalised to sum to one, so ``ridge_lambda`` acts on the
    weighted covariance scale regardless of how many samples were drawn. With
    ``k_features`` below ``Z.shape[1]`` a second fit uses only the largest
    ``|coef|`` features of the first.
    """
    Z = np.asarray(Z, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    n, m = Z.shape
    total = w.sum()
    if not np.isfinite(total) or total <= 0:
        raise KernelWidthError("all proximity weights vanished; increase kernel_width")
    w = w / total
    ess = 1.0 / float(np.sum(w**2))
    k = m if k_features is None else int(k_features)
    if ess < k + 1:
        raise KernelWidthError(
            f"effective sample size {ess:.1f} is too small for {k} features; increase kernel_width"
        )

    coef, intercept, A = _weighted_ridge(Z, y, w, ridge_lambda)
    selected = np.ones(m, dtype=bool)
    if k < m:
        keep = np.sort(np.argsort(-np.abs(coef), kind="stable")[:k])
        selected = np.zeros(m, dtype=bool)
        selected[keep] = True
        sub, intercept, A = _weighted_ridge(Z[:, keep], y, w, ridge_lambda)
        coef = np.zeros(m)
        coef[keep] = sub

    resid = y - intercept - Z @ coef
    ybar = float(w @ y)
    ss_res = float(w @ resid**2)
    ss_tot = float(w @ (y - ybar) ** 2)
    if ss_tot > 0:
        r2 = 1.0 - ss_res / ss_tot
    else:
        r2 = 1.0 if ss_res == 0 else 0.0
    # textbook WLS standard errors, weights as relative precisions
    dof = max(n - k - 1, 1)
    sigma2 = ss_res * n / dof
    cov = np.linalg.inv(A) * sigma2 / n
    stderr = np.zeros(m)
    stderr[selected] = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    return LocalSurrogate(coef, float(intercept), float(r2), stderr, selected, ess)


def local_surrogate(model, x, std: Standardizer, cfg: LimeConfig, index: int = 0) -> LocalSurrogate:
    """Perturb, query the model, weight by proximity and fit the surrogate for one instance."""
    x = np.asarray(x, dtype=np.float64)
    M = x.size
    rng = instance_rng(cfg.seed, index)
    x_std = std.transform(x[None, :])[0]
    Z = _draw(x_std, cfg.n_samples, rng)
    y = predict_batch(model, std.inverse_transform(Z))
    width = cfg.width_for(M)
    w = np.exp(-np.sum((Z - x_std) ** 2, axis=1) / width**2)
    return fit_surrogate(Z, y, w, cfg.ridge_lambda, cfg.features_for(M))


def explain_instance(model, x, std: Standardizer, cfg: LimeConfig, index: int = 0) -> AttributionVector:
    """LIME attribution for one row: surrogate coefficients plus its intercept as base value.

    Randomness is seeded by ``(cfg.seed, index)``.
    """
    s = local_surrogate(model, x, std, cfg, index)
    return AttributionVector(Method.LIME, getattr(model, "kind", None), s.intercept, s.coef)


def _explain_chunk(indices, model, X, std, cfg):
    return [explain_instance(model, X[i], std, cfg, int(i)) for i in indices]


def explain_all(model, X, std: Standardizer, cfg: LimeConfig, n_jobs: int = 1) -> list[AttributionVector]:
    X = np.asarray(X, dtype=np.float64)
    return map_instances(_explain_chunk, X.shape[0], n_jobs, model, X, std, cfg)


def mean_attribution(model, test, std: Standardizer, cfg: LimeConfig, n_jobs: int = 1) -> AttributionVector:
    """Signed per-feature mean of per-instance LIME coefficients over ``test``."""
    X = test.X if isinstance(test, Dataset) else np.asarray(test, dtype=np.float64)
    if X.shape[0] == 0:
        raise ValueError("cannot average attributions over an empty test set")
    names = test.feature_names if isinstance(test, Dataset) else None
    return average(explain_all(model, X, std, cfg, n_jobs), Method.LIME, getattr(model, "kind", None), names)


class LimeExplainer(TransformerMixin, BaseEstimator):
    """Estimator-style wrapper: ``fit`` learns the standardizer, ``transform`` returns coefficients."""

    def __init__(self, model, n_samples=5000, kernel_width=None, ridge_lambda=1e-3,
                 k_features=None, random_state=0, n_jobs=1):
        self.model = model
        self.n_samples = n_samples
        self.kernel_width = kernel_width
        self.ridge_lambda = ridge_lambda
        self.k_features = k_features
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        self.standardizer_ = fit_standardizer(X)
        self.config_ = LimeConfig(
            n_samples=self.n_samples, kernel_width=self.kernel_width, ridge_lambda=self.ridge_lambda,
            k_features=self.k_features, seed=self.random_state,
        )
        self.n_features_in_ = X.shape[1]
        return self

    def explain(self, X) -> list[AttributionVector]:
        check_is_fitted(self, "config_")
        X = check_array(X, dtype=np.float64)
        return explain_all(self.model, X, self.standardizer_, self.config_, self.n_jobs)

    def transform(self, X):
        return np.stack([v.contributions for v in self.explain(X)])

    def mean_attribution(self, X) -> AttributionVector:
        return average(self.explain(X), Method.LIME, getattr(self.model, "kind", None))
