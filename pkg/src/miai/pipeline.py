"""End-to-end protocol: data, split, four models, AUC, LIME and SHAP means, MIAI."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__, explain_lime, explain_shap
from ._games import prepare_games
from .agreement import MiaiResult, compute_miai
from .attribution import AttributionVector, Method, average
from .dataset import Dataset, fit_standardizer, generate_synthetic, load_csv, split_train_test
from .explain_lime import LimeConfig
from .explain_shap import ShapConfig, ShapMode, select_background
from .metrics import RocResult, roc_auc
from .models import ALL_KINDS, ModelKind, TrainConfig, load_model, predict_batch, train

log = logging.getLogger(__name__)

EXACT_SAMPLE_CAP = 100


class StageError(RuntimeError):
    """A protocol stage failed; ``stage`` names it and ``__cause__`` holds the original error."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class SyntheticSource:
    n_rows: int = 6471
    n_defaults: int = 50
    seed: int = 42

    def to_dict(self) -> dict:
        return {"n_rows": self.n_rows, "n_defaults": self.n_defaults, "seed": self.seed}


@dataclass(frozen=True)
class RunConfig:
    """Everything one protocol run depends on.

    ``data`` is a CSV path or a :class:`SyntheticSource`. ``explain_sample``
    caps the explained test rows to the first N of the test split.
    ``n_jobs`` affects speed only, never results.
    """

    data: Path | SyntheticSource = field(default_factory=SyntheticSource)
    split_ratio: float = 0.8
    seed: int = 42
    train: TrainConfig = field(default_factory=TrainConfig)
    lime: LimeConfig = field(default_factory=LimeConfig)
    shap: ShapConfig = field(default_factory=ShapConfig)
    explain_sample: int | None = None
    models: tuple[ModelKind, ...] = ALL_KINDS
    out_dir: Path = Path("out")
    n_jobs: int = 1
    models_dir: Path | None = None

    def __post_init__(self):
        if not isinstance(self.data, SyntheticSource):
            object.__setattr__(self, "data", Path(self.data))
        kinds = tuple(ModelKind.parse(k) for k in self.models)
        if not kinds:
            raise ValueError("at least one model kind is required")
        # canonical order, duplicates dropped
        object.__setattr__(self, "models", tuple(k for k in ALL_KINDS if k in kinds))
        if self.explain_sample is not None and self.explain_sample < 1:
            raise ValueError("explain_sample must be positive")
        if self.n_jobs < 1:
            raise ValueError("jobs must be at least 1")
        if self.shap.background is not None:
            raise ValueError("the run draws its own SHAP background; leave ShapConfig.background unset")

    @property
    def effective_explain_sample(self) -> int | None:
        if self.shap.mode is ShapMode.EXACT and self.explain_sample is None:
            return EXACT_SAMPLE_CAP
        return self.explain_sample

    def to_dict(self) -> dict:
        data = (
            {"synthetic": self.data.to_dict()}
            if isinstance(self.data, SyntheticSource)
            else {"csv": self.data.name}
        )
        return {
            "data": data,
            "split_ratio": self.split_ratio,
            "seed": self.seed,
            "train": self.train.to_dict(),
            "lime": self.lime.to_dict(),
            "shap": {k: v for k, v in self.shap.to_dict().items() if k != "n_background"},
            "explain_sample": self.effective_explain_sample,
            "models": [k.value for k in self.models],
        }


@dataclass
class RunReport:
    config: RunConfig
    dataset_sha256: str
    n_rows: int
    n_train: int
    n_test: int
    explained_rows: int
    split_warnings: tuple[str, ...]
    roc: dict[ModelKind, RocResult] = field(default_factory=dict)
    lime: dict[ModelKind, AttributionVector] = field(default_factory=dict)
    shap: dict[ModelKind, AttributionVector] = field(default_factory=dict)
    shap_instances: dict[ModelKind, list[AttributionVector]] = field(default_factory=dict)
    miai: dict[ModelKind, MiaiResult] = field(default_factory=dict)
    models: dict = field(default_factory=dict)
    timing: dict[str, float] = field(default_factory=dict)

    @property
    def kinds(self) -> tuple[ModelKind, ...]:
        return self.config.models

    def auc(self, kind) -> float:
        return self.roc[ModelKind.parse(kind)].auc

    def observations(self) -> dict:
        """Qualitative comparisons, reported without being asserted."""
        obs = {}
        lr = ModelKind.LOGISTIC_REGRESSION
        if lr in self.roc:
            for k in (ModelKind.RANDOM_FOREST, ModelKind.GRADIENT_BOOSTING):
                if k in self.roc:
                    obs[f"{k.value}_auc_exceeds_LR"] = self.roc[k].auc > self.roc[lr].auc
        if self.miai:
            obs["miai_ranking"] = [k.value for k in sorted(self.miai, key=lambda k: -self.miai[k].miai)]
        return obs


class _Stage:
    def __init__(self, name, timing):
        self.name, self.timing = name, timing

    def __enter__(self):
        log.info("stage %s", self.name)
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.timing[self.name] = self.timing.get(self.name, 0.0) + time.perf_counter() - self.t0
        if exc is not None and not isinstance(exc, StageError):
            raise StageError(self.name, exc) from exc
        return False


def load_data(source) -> Dataset:
    if isinstance(source, SyntheticSource):
        return generate_synthetic(source.n_rows, source.n_defaults, source.seed)
    return load_csv(source)


def run_protocol(cfg: RunConfig) -> RunReport:
    """Run the full comparison and return the in-memory report (nothing is written)."""
    timing: dict[str, float] = {}
    t_start = time.perf_counter()

    with _Stage("data", timing):
        data = load_data(cfg.data)
    with _Stage("split", timing):
        split = split_train_test(data, cfg.split_ratio, cfg.seed)
        for w in split.warnings:
            log.warning("%s", w)
        std = fit_standardizer(split.train)
        n_explain = cfg.effective_explain_sample
        explained = split.test if n_explain is None else split.test.subset(np.arange(min(n_explain, len(split.test))))
        background = select_background(split.train.X, cfg.shap.max_background, cfg.seed)
        shap_cfg = replace(cfg.shap, background=background)

    report = RunReport(
        config=cfg,
        dataset_sha256=data.sha256(),
        n_rows=len(data),
        n_train=len(split.train),
        n_test=len(split.test),
        explained_rows=len(explained),
        split_warnings=split.warnings,
        timing=timing,
    )

    for kind in cfg.models:
        tag = kind.value
        with _Stage(f"train[{tag}]", timing):
            if cfg.models_dir is not None:
                model = load_model(Path(cfg.models_dir) / f"{tag.lower()}.json")
                if model.kind is not kind:
                    raise ValueError(f"{tag.lower()}.json holds a {model.kind.value} model")
            else:
                model = train(kind, split.train, cfg.train)
            report.models[kind] = model
        with _Stage(f"evaluate[{tag}]", timing):
            report.roc[kind] = roc_auc(predict_batch(model, split.test.X), split.test.y)
        with _Stage(f"lime[{tag}]", timing):
            report.lime[kind] = explain_lime.mean_attribution(model, explained, std, cfg.lime, cfg.n_jobs)
        with _Stage(f"shap[{tag}]", timing):
            games = prepare_games(model, background)
            per_row = explain_shap.explain_all(model, explained.X, shap_cfg, cfg.n_jobs, games)
            report.shap_instances[kind] = per_row
            report.shap[kind] = average(per_row, Method.SHAP, kind, explained.feature_names)
        with _Stage(f"miai[{tag}]", timing):
            report.miai[kind] = compute_miai(report.lime[kind], report.shap[kind])
        log.info("%s: AUC %.4f MIAI %.4f", tag, report.roc[kind].auc, report.miai[kind].miai)

    timing["total"] = time.perf_counter() - t_start
    return report


def report_metadata(report: RunReport) -> dict:
    return {
        "version": __version__,
        "seed": report.config.seed,
        "config": report.config.to_dict(),
        "dataset_sha256": report.dataset_sha256,
        "n_rows": report.n_rows,
        "n_train": report.n_train,
        "n_test": report.n_test,
        "explained_rows": report.explained_rows,
        "split_warnings": list(report.split_warnings),
        "observations": report.observations(),
    }
