"""Agreement between LIME and SHAP mean attributions: the MIAI cosine score and sign tables."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from decimal import Decimal
from functools import cache
from importlib import resources
from typing import NamedTuple

import numpy as np

from .attribution import AttributionVector, Method
from .dataset import FEATURE_NAMES, FEATURE_SPECS, FeatureSpec
from .models import ALL_KINDS, ModelKind

ZERO_TOLERANCE = 1e-12
FIXTURE_TOLERANCE = 0.02
EXPECTED_LR_SIGN_MATCHES = 9


class UndefinedMiaiError(ValueError):
    """At least one of the two vectors is all zeros, so no direction exists."""


class PairingError(ValueError):
    """The two attribution vectors cannot be compared with each other."""


def cosine_similarity(z, w) -> float:
    """``z.w / (|z| |w|)`` clamped to ``[-1, 1]``."""
    z = np.asarray(z, dtype=np.float64).ravel()
    w = np.asarray(w, dtype=np.float64).ravel()
    if z.shape != w.shape:
        raise PairingError(f"vectors differ in length ({z.size} vs {w.size})")
    nz, nw = float(np.linalg.norm(z)), float(np.linalg.norm(w))
    if nz == 0.0 or nw == 0.0:
        raise UndefinedMiaiError("MIAI is undefined for a zero attribution vector")
    return min(1.0, max(-1.0, float(np.dot(z, w)) / (nz * nw)))


def sign_of(x: float) -> int:
    return 0 if abs(x) < ZERO_TOLERANCE else (1 if x > 0 else -1)


def theory_table() -> tuple[FeatureSpec, ...]:
    """Expected direction of each feature's effect on default risk."""
    return FEATURE_SPECS


class SignRow(NamedTuple):
    feature: str
    theory_sign: int
    lime_sign: int
    shap_sign: int
    lime_matches_theory: bool
    shap_matches_theory: bool
    lime_matches_shap: bool


def _match(a: int, b: int) -> bool:
    return a != 0 and a == b


@dataclass(frozen=True)
class SignTable:
    rows: tuple[SignRow, ...]

    @classmethod
    def from_signs(cls, features, theory, lime, shap) -> "SignTable":
        rows = tuple(
            SignRow(f, t, l, s, _match(l, t), _match(s, t), _match(l, s))
            for f, t, l, s in zip(features, theory, lime, shap)
        )
        return cls(rows)

    @property
    def lime_matches_theory(self) -> int:
        return sum(r.lime_matches_theory for r in self.rows)

    @property
    def shap_matches_theory(self) -> int:
        return sum(r.shap_matches_theory for r in self.rows)

    @property
    def lime_matches_shap(self) -> int:
        return sum(r.lime_matches_shap for r in self.rows)

    def counts(self) -> dict[str, int]:
        return {
            "lime_matches_theory": self.lime_matches_theory,
            "shap_matches_theory": self.shap_matches_theory,
            "lime_matches_shap": self.lime_matches_shap,
        }

    def to_dict(self) -> dict:
        return {"rows": [r._asdict() for r in self.rows], "counts": self.counts()}


def _check_pair(lime: AttributionVector, shap: AttributionVector) -> None:
    if lime.method is not Method.LIME or shap.method is not Method.SHAP:
        raise PairingError(
            f"expected a LIME and a SHAP vector, got {lime.method.value} and {shap.method.value}"
        )
    if lime.model_kind != shap.model_kind:
        raise PairingError(f"model mismatch: LIME for {lime.model_kind}, SHAP for {shap.model_kind}")
    if lime.feature_names != shap.feature_names:
        raise PairingError("LIME and SHAP vectors use different feature orders")


def sign_consistency(lime: AttributionVector, shap: AttributionVector, theory=None) -> SignTable:
    """Per-feature signs of both vectors and of theory, with three match columns.

    Values within 1e-12 of zero get sign 0, which never counts as a match.
    """
    _check_pair(lime, shap)
    specs = {s.name: s.theory_sign for s in (theory or theory_table())}
    try:
        t = [specs[name] for name in lime.feature_names]
    except KeyError as exc:
        raise PairingError(f"no theory sign for feature {exc.args[0]!r}") from None
    return SignTable.from_signs(
        lime.feature_names, t,
        [sign_of(v) for v in lime.contributions],
        [sign_of(v) for v in shap.contributions],
    )


@dataclass(frozen=True)
class MiaiResult:
    model_kind: ModelKind | None
    lime_vector: np.ndarray
    shap_vector: np.ndarray
    miai: float
    sign_table: SignTable | None = None


def compute_miai(lime: AttributionVector, shap: AttributionVector, theory=None) -> MiaiResult:
    _check_pair(lime, shap)
    miai = cosine_similarity(shap.contributions, lime.contributions)
    table = None
    if theory is not None or set(lime.feature_names) <= set(FEATURE_NAMES):
        table = sign_consistency(lime, shap, theory)
    return MiaiResult(lime.model_kind, lime.contributions, shap.contributions, miai, table)


# Published fixture


@dataclass(frozen=True)
class PublishedTables:
    """Values printed in the reference study, kept as the exact decimal strings."""

    feature_order: tuple[str, ...]
    auc: dict
    lime: dict
    shap: dict
    miai: dict
    lime_signs: dict
    shap_signs: dict
    stated_sign_matches: dict

    @classmethod
    def from_dict(cls, doc: dict) -> "PublishedTables":
        def by_kind(d):
            return {ModelKind.parse(k): v for k, v in d.items() if k != "theory"}

        return cls(
            feature_order=tuple(doc["feature_order"]),
            auc=by_kind(doc["table2_auc"]),
            lime=by_kind(doc["table3_lime"]),
            shap=by_kind(doc["table4_shap"]),
            miai=by_kind(doc["table5_miai"]),
            lime_signs={"theory": doc["table6_lime_signs"]["theory"], **by_kind(doc["table6_lime_signs"])},
            shap_signs={"theory": doc["table7_shap_signs"]["theory"], **by_kind(doc["table7_shap_signs"])},
            stated_sign_matches=by_kind(doc["stated_lime_shap_sign_matches"]),
        )

    def _vector(self, table, method, kind) -> AttributionVector:
        kind = ModelKind.parse(kind)
        values = [float(Decimal(table[kind][f])) for f in self.feature_order]
        return AttributionVector(method, kind, 0.0, values, feature_names=self.feature_order)

    def lime_vector(self, kind) -> AttributionVector:
        return self._vector(self.lime, Method.LIME, kind)

    def shap_vector(self, kind) -> AttributionVector:
        return self._vector(self.shap, Method.SHAP, kind)

    def expected_miai(self, kind) -> float:
        return float(self.miai[ModelKind.parse(kind)])

    def printed_signs(self, table: dict, kind) -> list[int]:
        """Signs as printed in the sign-comparison tables (``+``/``-``)."""
        col = table[kind if kind == "theory" else ModelKind.parse(kind)]
        return [1 if col[f] == "+" else -1 for f in self.feature_order]


@cache
def published_tables() -> PublishedTables:
    text = resources.files("miai").joinpath("data/published_tables.json").read_text(encoding="utf-8")
    return PublishedTables.from_dict(json.loads(text))


@dataclass(frozen=True)
class FixtureCheck:
    miai: dict
    expected: dict
    sign_matches: dict
    expected_lr_sign_matches: int
    tolerance: float

    @property
    def failing_models(self) -> list[ModelKind]:
        bad = [k for k in self.miai if not abs(self.miai[k] - self.expected[k]) <= self.tolerance]
        lr = ModelKind.LOGISTIC_REGRESSION
        if self.sign_matches[lr] != self.expected_lr_sign_matches and lr not in bad:
            bad.insert(0, lr)
        return bad

    @property
    def passed(self) -> bool:
        return not self.failing_models

    def lines(self) -> list[str]:
        out = []
        for k in self.miai:
            ok = abs(self.miai[k] - self.expected[k]) <= self.tolerance
            out.append(
                f"{k.value:<4} MIAI {self.miai[k]: .5f} expected {self.expected[k]: .4f} "
                f"+/- {self.tolerance}: {'ok' if ok else 'FAIL'}"
            )
        lr = ModelKind.LOGISTIC_REGRESSION
        got = self.sign_matches[lr]
        out.append(
            f"LR   LIME/SHAP sign matches {got} expected {self.expected_lr_sign_matches}: "
            f"{'ok' if got == self.expected_lr_sign_matches else 'FAIL'}"
        )
        return out


def check_fixture(
    tables: PublishedTables | None = None,
    tolerance: float = FIXTURE_TOLERANCE,
    lr_sign_matches: int = EXPECTED_LR_SIGN_MATCHES,
) -> FixtureCheck:
    """Recompute MIAI and LIME/SHAP sign agreement from the published attribution tables."""
    tables = tables or published_tables()
    miai, expected, signs = {}, {}, {}
    for kind in ALL_KINDS:
        result = compute_miai(tables.lime_vector(kind), tables.shap_vector(kind))
        miai[kind] = result.miai
        expected[kind] = tables.expected_miai(kind)
        signs[kind] = result.sign_table.lime_matches_shap
    if not math.isfinite(tolerance) or tolerance < 0:
        raise ValueError("tolerance must be a non-negative number")
    return FixtureCheck(miai, expected, signs, lr_sign_matches, tolerance)
