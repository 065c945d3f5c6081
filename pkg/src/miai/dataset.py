"""Bond-issuer tabular data: schema, CSV I/O, splitting, scaling and a synthetic generator."""

from __future__ import annotations

import csv
import hashlib
import io
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

logger = logging.getLogger(__name__)


class FeatureSpec(NamedTuple):
    name: str
    description: str
    theory_sign: int


#: Canonical feature order. ``theory_sign`` is the direction in which a larger
#: value is expected to move default risk under standard corporate-finance reasoning.
FEATURE_SPECS: tuple[FeatureSpec, ...] = (
    FeatureSpec("PrCb", "Profit rate of core businesses", -1),
    FeatureSpec("Igrb", "Income growth rate of core businesses", -1),
    FeatureSpec("Roa", "Return on asset", -1),
    FeatureSpec("Roe", "Return on equity", -1),
    FeatureSpec("EBII", "EBITDA/Total Income", -1),
    FeatureSpec("Ocebi", "Operating cash/EBITDA", -1),
    FeatureSpec("Lr", "Liquidity ratio", -1),
    FeatureSpec("Qr", "Quick ratio", -1),
    FeatureSpec("Rst", "Rate of stock turnover", -1),
    FeatureSpec("Alr", "Asset-liability ratio", +1),
    FeatureSpec("Sdtd", "Short-term debt / total debt", +1),
    FeatureSpec("Ditc", "Debt with interest / total investment capital", +1),
    FeatureSpec("Mtd", "Monetary / total debt", -1),
    FeatureSpec("Im", "Interest multiples", -1),
    FeatureSpec("Ebit", "EBITDA / total debt with interest", -1),
    FeatureSpec("Aou", "Audit opinion (ordinal 1-4)", -1),
)
FEATURE_NAMES: tuple[str, ...] = tuple(f.name for f in FEATURE_SPECS)
N_FEATURES = len(FEATURE_NAMES)
LABEL_COLUMN = "default"
CSV_HEADER: tuple[str, ...] = (LABEL_COLUMN,) + FEATURE_NAMES
AOU_INDEX = FEATURE_NAMES.index("Aou")
AOU_VALUES = (1, 2, 3, 4)


class DatasetError(ValueError):
    """Base class for data ingestion and validation failures."""


class SchemaError(DatasetError):
    pass


class ParseError(DatasetError):
    pass


class ValidationError(DatasetError):
    pass


class EncodingError(DatasetError):
    pass


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable labeled design matrix in canonical feature order.

    ``X`` has shape ``(n, 16)``; ``y`` holds the default indicator (1 = default).
    Both arrays are stored read-only so a dataset can be shared across workers.
    """

    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...] = FEATURE_NAMES

    def __post_init__(self):
        X = np.array(self.X, dtype=np.float64, copy=True)
        y = np.array(self.y, copy=True)
        if X.ndim != 2 or X.shape[1] != len(self.feature_names):
            raise ValidationError(
                f"expected a 2-d matrix with {len(self.feature_names)} columns, got shape {X.shape}"
            )
        if y.shape != (X.shape[0],):
            raise ValidationError(f"{X.shape[0]} rows but {y.shape} labels")
        if not np.all(np.isfinite(X)):
            raise ValidationError("feature matrix contains non-finite values")
        if y.size and not np.all((y == 0) | (y == 1)):
            raise ValidationError("labels must be 0 or 1")
        y = y.astype(np.int64)
        if "Aou" in self.feature_names and X.shape[0]:
            aou = X[:, self.feature_names.index("Aou")]
            bad = np.flatnonzero(~np.isin(aou, AOU_VALUES))
            if bad.size:
                raise ValidationError(
                    f"Aou must be one of {AOU_VALUES}; row {bad[0] + 1} has {aou[bad[0]]!r}"
                )
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    def __len__(self) -> int:
        return self.X.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.feature_names == other.feature_names
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.y, other.y)
        )

    @property
    def schema(self) -> tuple[FeatureSpec, ...]:
        by_name = {f.name: f for f in FEATURE_SPECS}
        return tuple(by_name[n] for n in self.feature_names)

    @property
    def n_defaults(self) -> int:
        return int(self.y.sum())

    def subset(self, index) -> "Dataset":
        index = np.asarray(index)
        return Dataset(self.X[index], self.y[index], self.feature_names)

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow((LABEL_COLUMN,) + self.feature_names)
        for label, row in zip(self.y, self.X):
            writer.writerow([int(label)] + [_format_cell(name, v) for name, v in zip(self.feature_names, row)])
        return buf.getvalue()

    def to_csv(self, path) -> None:
        Path(path).write_text(self.to_csv_text(), encoding="utf-8", newline="")

    def sha256(self) -> str:
        return hashlib.sha256(self.to_csv_text().encode("utf-8")).hexdigest()


def _format_cell(name: str, value: float) -> str:
    if name == "Aou":
        return str(int(value))
    # repr round-trips float64 exactly
    return repr(float(value))


def load_csv(path) -> Dataset:
    """Read a canonical CSV (``default,PrCb,...,Aou``) into a :class:`Dataset`.

    Columns may appear in any order in the file; rows keep file order.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: empty file, header row expected") from None
        for col in CSV_HEADER:
            if col not in header:
                raise SchemaError(f"{path}: missing column {col!r}")
        positions = [header.index(c) for c in CSV_HEADER]
        labels, rows = [], []
        for row_no, record in enumerate(reader, start=1):
            if not record or all(not cell.strip() for cell in record):
                continue
            if len(record) != len(header):
                raise ParseError(
                    f"{path}: row {row_no} has {len(record)} cells, header has {len(header)}"
                )
            values = []
            for col, pos in zip(CSV_HEADER, positions):
                cell = record[pos].strip()
                try:
                    v = float(cell)
                except ValueError:
                    raise ParseError(
                        f"{path}: row {row_no}, column {col!r}: non-numeric value {cell!r}"
                    ) from None
                if not math.isfinite(v):
                    raise ParseError(f"{path}: row {row_no}, column {col!r}: non-finite value {cell!r}")
                values.append(v)
            if values[0] not in (0.0, 1.0):
                raise ValidationError(f"{path}: row {row_no}: default must be 0 or 1, got {values[0]!r}")
            if values[1 + AOU_INDEX] not in AOU_VALUES:
                raise ValidationError(
                    f"{path}: row {row_no}: Aou must be one of {AOU_VALUES}, got {values[1 + AOU_INDEX]!r}"
                )
            labels.append(int(values[0]))
            rows.append(values[1:])
    X = np.asarray(rows, dtype=np.float64).reshape(len(rows), N_FEATURES)
    return Dataset(X, np.asarray(labels, dtype=np.int64))


_AUDIT_OPINIONS = {
    "unable to express an opinion": 1,
    "unqualified opinion with emphasis of matter paragraph": 2,
    "qualified opinion": 3,
    "standard unqualified opinion": 4,
}
_AUDIT_ALIASES = {
    "disclaimer of opinion": 1,
    "unqualified with emphasis": 2,
    "unqualified opinion with emphasis of matter": 2,
    "unqualified with emphasis of matter": 2,
    "standard unqualified": 4,
}


def encode_audit_opinion(text: str) -> int:
    """Map an external audit opinion category to its ordinal (1 = worst, 4 = clean)."""
    key = " ".join(str(text).strip().strip("'\"").lower().replace("-", " ").split())
    code = _AUDIT_OPINIONS.get(key, _AUDIT_ALIASES.get(key))
    if code is None:
        raise EncodingError(f"unknown audit opinion category: {text!r}")
    return code


@dataclass(frozen=True)
class SplitResult:
    train: Dataset
    test: Dataset
    seed: int
    train_index: np.ndarray = field(repr=False)
    test_index: np.ndarray = field(repr=False)
    warnings: tuple[str, ...] = ()


def split_train_test(d: Dataset, ratio: float = 0.8, seed: int = 0) -> SplitResult:
    """Uniformly shuffle rows and cut the permutation at ``round(ratio * N)``.

    No stratification: class imbalance is carried into both halves as-is.
    """
    n = len(d)
    if n < 2:
        raise DatasetError(f"need at least 2 rows to split, got {n}")
    if not 0.0 < ratio < 1.0:
        raise DatasetError(f"split ratio must be in (0, 1), got {ratio}")
    n_train = min(max(math.floor(ratio * n + 0.5), 1), n - 1)
    perm = np.random.default_rng(seed).permutation(n)
    train_idx, test_idx = perm[:n_train], perm[n_train:]

    notes = []
    if np.unique(d.y).size < 2:
        notes.append("input has a single class; AUC and LR/GBT training are undefined")
    else:
        for name, idx in (("train", train_idx), ("test", test_idx)):
            if np.unique(d.y[idx]).size < 2:
                notes.append(f"{name} split contains a single class")
    for note in notes:
        warnings.warn(note, stacklevel=2)
    return SplitResult(
        train=d.subset(train_idx),
        test=d.subset(test_idx),
        seed=seed,
        train_index=train_idx,
        test_index=test_idx,
        warnings=tuple(notes),
    )


class Standardizer(TransformerMixin, BaseEstimator):
    """Per-feature z-scoring fitted on training rows only.

    Zero-variance columns get a scale of 1 (with a warning) so they map to 0
    instead of dividing by zero.
    """

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        if X.shape[0] == 0:
            raise ValueError("cannot fit a standardizer on zero rows")
        self.mean_ = X.mean(axis=0)
        scale = X.std(axis=0)
        flat = ~(scale > 0)
        if flat.any():
            warnings.warn(
                f"zero-variance feature(s) at column(s) {np.flatnonzero(flat).tolist()}; scale clamped to 1",
                stacklevel=2,
            )
            scale = np.where(flat, 1.0, scale)
        self.scale_ = scale
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "scale_")
        X = check_array(X, dtype=np.float64)
        _check_width(X, self.n_features_in_)
        return (X - self.mean_) / self.scale_

    def inverse_transform(self, Z):
        check_is_fitted(self, "scale_")
        Z = check_array(Z, dtype=np.float64)
        _check_width(Z, self.n_features_in_)
        return Z * self.scale_ + self.mean_


def _check_width(X, n):
    if X.shape[1] != n:
        raise ValueError(f"expected {n} features, got {X.shape[1]}")


def fit_standardizer(train: Dataset | np.ndarray) -> Standardizer:
    X = train.X if isinstance(train, Dataset) else train
    if len(X) == 0:
        raise DatasetError("cannot fit a standardizer on an empty training set")
    return Standardizer().fit(X)


def apply_standardizer(s: Standardizer, rows) -> np.ndarray:
    return s.transform(np.atleast_2d(rows))


# -- synthetic issuer data ---------------------------------------------------

# Latent-risk weight magnitudes per standardized feature; the sign comes from
# ``theory_sign`` so the generator's ground-truth directions are known.
_RISK_WEIGHTS = {
    "PrCb": 0.45, "Igrb": 0.30, "Roa": 1.00, "Roe": 0.40, "EBII": 0.25, "Ocebi": 0.35,
    "Lr": 0.55, "Qr": 0.30, "Rst": 0.20, "Alr": 0.90, "Sdtd": 0.45, "Ditc": 0.40,
    "Mtd": 0.50, "Im": 0.45, "Ebit": 0.50, "Aou": 0.60,
}


def _draw_features(rng: np.random.Generator, n: int) -> np.ndarray:
    cols = {}
    cols["PrCb"] = rng.normal(0.18, 0.12, n)
    cols["Igrb"] = 0.08 + 0.15 * rng.standard_t(5, n)
    roa = rng.normal(0.035, 0.035, n)
    cols["Roa"] = roa
    cols["Roe"] = 2.2 * roa + rng.normal(0.0, 0.04, n)
    cols["EBII"] = rng.normal(0.22, 0.12, n)
    cols["Ocebi"] = rng.normal(0.7, 0.6, n)
    lr = rng.lognormal(np.log(1.4), 0.45, n)
    cols["Lr"] = lr
    cols["Qr"] = lr * rng.uniform(0.45, 0.9, n)
    cols["Rst"] = rng.lognormal(np.log(4.0), 0.7, n)
    cols["Alr"] = np.clip(rng.normal(0.6, 0.14, n), 0.05, 0.98)
    cols["Sdtd"] = rng.beta(2.5, 2.5, n)
    cols["Ditc"] = rng.beta(4.0, 4.0, n)
    cols["Mtd"] = rng.lognormal(np.log(0.25), 0.6, n)
    cols["Im"] = rng.lognormal(np.log(3.5), 0.7, n)
    cols["Ebit"] = rng.lognormal(np.log(0.18), 0.6, n)
    cols["Aou"] = rng.choice(np.array(AOU_VALUES, dtype=np.float64), size=n, p=[0.01, 0.03, 0.02, 0.94])
    return np.column_stack([cols[name] for name in FEATURE_NAMES])


def latent_risk(X: np.ndarray, nonlinearity: float = 1.0, scaler: Standardizer | None = None) -> np.ndarray:
    """Noise-free default risk score used by :func:`generate_synthetic`.

    A fixed linear combination of z-scored features (signs from the theory
    table) plus threshold terms that are monotone in the same directions.
    """
    scaler = scaler if scaler is not None else Standardizer().fit(X)
    Z = scaler.transform(X)
    w = np.array([spec.theory_sign * _RISK_WEIGHTS[spec.name] for spec in FEATURE_SPECS])
    risk = Z @ w
    if nonlinearity:
        col = {name: X[:, i] for i, name in enumerate(FEATURE_NAMES)}
        bump = (
            1.5 * ((col["Alr"] > 0.78) & (col["Mtd"] < 0.2))
            + 1.2 * (col["Aou"] <= 2)
            + 1.0 * ((col["Roa"] < 0.0) & (col["Lr"] < 1.1))
        )
        risk = risk + nonlinearity * bump
    return risk


def generate_synthetic(
    n_rows: int,
    n_defaults: int,
    seed: int = 42,
    *,
    noise: float = 0.5,
    nonlinearity: float = 1.0,
    return_risk: bool = False,
):
    """Draw issuer-like rows and label the ``n_defaults`` riskiest as defaults.

    Risk is :func:`latent_risk` plus Gaussian noise of scale ``noise``; labels go
    to the top-``n_defaults`` rows of the noisy score, so exactly that many rows
    default. Bit-identical for a fixed ``seed``.
    """
    n_rows, n_defaults = int(n_rows), int(n_defaults)
    if n_rows < 2:
        raise DatasetError(f"n_rows must be at least 2, got {n_rows}")
    if not 0 < n_defaults < n_rows:
        raise DatasetError(f"need 0 < n_defaults < n_rows, got n_defaults={n_defaults}, n_rows={n_rows}")
    rng = np.random.default_rng(seed)
    X = _draw_features(rng, n_rows)
    risk = latent_risk(X, nonlinearity)
    noisy = risk + noise * rng.standard_normal(n_rows)
    order = np.argsort(-noisy, kind="stable")
    y = np.zeros(n_rows, dtype=np.int64)
    y[order[:n_defaults]] = 1
    data = Dataset(X, y)
    return (data, risk) if return_risk else data
