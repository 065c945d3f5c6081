"""Agreement between LIME and SHAP explanations of tabular default-risk classifiers."""

__version__ = "0.1.0"

from .agreement import (  # noqa: E402
    MiaiResult,
    SignTable,
    UndefinedMiaiError,
    check_fixture,
    compute_miai,
    cosine_similarity,
    sign_consistency,
    theory_table,
)
from .attribution import AttributionVector, Method  # noqa: E402
from .dataset import (  # noqa: E402
    Dataset,
    Standardizer,
    encode_audit_opinion,
    fit_standardizer,
    generate_synthetic,
    load_csv,
    split_train_test,
)
from .explain_lime import LimeConfig, LimeExplainer  # noqa: E402
from .explain_shap import ShapConfig, ShapExplainer, ShapMode  # noqa: E402
from .metrics import RocResult, roc_auc  # noqa: E402
from .models import ModelKind, TrainConfig, predict_batch, predict_proba, train  # noqa: E402

__all__ = [
    "AttributionVector", "Dataset", "LimeConfig", "LimeExplainer", "Method", "MiaiResult",
    "ModelKind", "RocResult", "ShapConfig", "ShapExplainer", "ShapMode", "SignTable",
    "Standardizer", "TrainConfig", "UndefinedMiaiError", "check_fixture", "compute_miai",
    "cosine_similarity", "encode_audit_opinion", "fit_standardizer", "generate_synthetic",
    "load_csv", "predict_batch", "predict_proba", "roc_auc", "sign_consistency",
    "split_train_test", "theory_table", "train",
]
