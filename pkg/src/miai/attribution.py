from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .dataset import FEATURE_NAMES
from .models import ModelKind


class Method(str, Enum):
    LIME = "LIME"
    SHAP = "SHAP"


@dataclass(frozen=True, eq=False)
class AttributionVector:
    """Additive explanation ``base_value + sum(contributions)``, one entry per feature.

    For an averaged vector, both fields are means over ``n_instances_averaged``
    instances.
    """

    method: Method
    model_kind: ModelKind | None
    base_value: float
    contributions: np.ndarray
    n_instances_averaged: int = 1
    feature_names: tuple[str, ...] = field(default=FEATURE_NAMES)

    def __post_init__(self):
        c = np.array(self.contributions, dtype=np.float64, copy=True).ravel()
        if not np.all(np.isfinite(c)):
            raise ValueError("attribution contributions must be finite")
        names = tuple(self.feature_names)
        if len(names) != c.size:
            if names == FEATURE_NAMES:
                names = tuple(f"x{i}" for i in range(c.size))
            else:
                raise ValueError(f"{c.size} contributions for {len(names)} feature names")
        c.flags.writeable = False
        object.__setattr__(self, "contributions", c)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "method", Method(self.method))
        if self.model_kind is not None:
            object.__setattr__(self, "model_kind", ModelKind.parse(self.model_kind))
        object.__setattr__(self, "base_value", float(self.base_value))

    def __len__(self):
        return self.contributions.size

    def __eq__(self, other):
        if not isinstance(other, AttributionVector):
            return NotImplemented
        return (
            self.method == other.method
            and self.model_kind == other.model_kind
            and self.base_value == other.base_value
            and np.array_equal(self.contributions, other.contributions)
            and self.n_instances_averaged == other.n_instances_averaged
            and self.feature_names == other.feature_names
        )

    @property
    def total(self) -> float:
        """``base_value + sum(contributions)``; the model output for a SHAP vector."""
        return self.base_value + float(np.sum(self.contributions))

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.feature_names, self.contributions.tolist()))


def average(vectors, method, model_kind, feature_names=None) -> AttributionVector:
    """Signed per-feature mean of per-instance attributions."""
    vectors = list(vectors)
    if not vectors:
        raise ValueError("nothing to average")
    contrib = np.mean(np.stack([v.contributions for v in vectors]), axis=0)
    base = float(np.mean([v.base_value for v in vectors]))
    return AttributionVector(
        method=method,
        model_kind=model_kind,
        base_value=base,
        contributions=contrib,
        n_instances_averaged=len(vectors),
        feature_names=feature_names or vectors[0].feature_names,
    )
