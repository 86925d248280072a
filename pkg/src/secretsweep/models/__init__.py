"""Classifiers over sparse feature vectors: logistic regression and
gradient-boosted trees, with recall-targeted threshold tuning."""

from .config import TrainConfig
from .errors import DivergenceError, TrainingError
from .gbdt import GbdtModel, Tree, predict_gbdt, predict_gbdt_many, train_gbdt
from .io import (
    ModelFormatError,
    load_model,
    model_from_dict,
    model_to_dict,
    save_model,
    spec_fingerprint,
)
from .logistic import (
    LogisticModel,
    gradient_logloss,
    predict_logistic,
    predict_logistic_many,
    train_logistic,
)
from .threshold import ThresholdError, ThresholdResult, tune_threshold

__all__ = [
    "TrainConfig",
    "TrainingError",
    "DivergenceError",
    "Tree",
    "GbdtModel",
    "LogisticModel",
    "ModelFormatError",
    "ThresholdError",
    "ThresholdResult",
    "train_logistic",
    "predict_logistic",
    "predict_logistic_many",
    "gradient_logloss",
    "train_gbdt",
    "predict_gbdt",
    "predict_gbdt_many",
    "tune_threshold",
    "save_model",
    "load_model",
    "model_to_dict",
    "model_from_dict",
    "spec_fingerprint",
]
