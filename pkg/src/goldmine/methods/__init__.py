"""Inference strategies: losses, training, surrogates, local calibration."""

from .local import CalibratedLocalRatio, HistogramDensity, calibrate_local
from .losses import (
    FAMILY_LOSSES,
    classifier_loss,
    density_loss,
    ratio_loss,
    score_loss,
)
from .registry import METHODS, MethodInfo, default_spec, get_method, resolve_alpha
from .surrogate import (
    SurrogateModel,
    evaluate_log_ratio,
    log_density_at,
    predict_score,
)
from .training import TrainConfig, train

__all__ = [
    "CalibratedLocalRatio",
    "FAMILY_LOSSES",
    "HistogramDensity",
    "METHODS",
    "MethodInfo",
    "SurrogateModel",
    "TrainConfig",
    "calibrate_local",
    "classifier_loss",
    "default_spec",
    "density_loss",
    "evaluate_log_ratio",
    "get_method",
    "log_density_at",
    "predict_score",
    "ratio_loss",
    "resolve_alpha",
    "score_loss",
    "train",
]
