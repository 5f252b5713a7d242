"""goldmine: mine likelihood ratios and scores from instrumented simulators.

Stochastic simulators rarely admit tractable likelihoods, but the
latent-variable trajectory of a single run usually does. This package
instruments two such simulators (a generalized Galton board and a
Lotka-Volterra birth-death process) to extract, per run, the joint
likelihood ratio and the joint score, then trains small neural
surrogates on the augmented data. Surrogate families cover calibrated
classifiers, direct ratio regression, score regression, conditional
density estimation, and their score-regularized variants.
"""

from .config import ExperimentConfig
from .data import (
    Dataset,
    make_galton_dataset,
    make_galton_reference_dataset,
    make_lotka_dataset,
)
from .estimators import LocalRatioEstimator, RatioEstimator
from .evaluation import (
    ConfidenceRegion,
    EnsembleReference,
    MseReport,
    build_ensemble_reference,
    confidence_region,
    lotka_eval_points,
    mse_log_ratio,
    predict_log_ratio,
    score_diagnostics,
)
from .exceptions import (
    ConfigError,
    DataError,
    DegenerateStep,
    DigestMismatch,
    GoldmineError,
    MissingAugmentation,
    NonFiniteLoss,
    NonpositiveDensity,
    NumericError,
    ReferenceMismatch,
)
from .methods import METHODS, SurrogateModel, TrainConfig, train
from .simulators import (
    REFERENCE_LOG_RATES,
    GaltonBoard,
    GaltonConfig,
    LotkaVolterra,
    LotkaVolterraConfig,
)

__version__ = "0.1.0"

__all__ = [
    "ConfidenceRegion",
    "ConfigError",
    "DataError",
    "Dataset",
    "DegenerateStep",
    "DigestMismatch",
    "EnsembleReference",
    "ExperimentConfig",
    "GaltonBoard",
    "GaltonConfig",
    "GoldmineError",
    "LocalRatioEstimator",
    "LotkaVolterra",
    "LotkaVolterraConfig",
    "METHODS",
    "MissingAugmentation",
    "MseReport",
    "NonFiniteLoss",
    "NonpositiveDensity",
    "NumericError",
    "RatioEstimator",
    "REFERENCE_LOG_RATES",
    "ReferenceMismatch",
    "SurrogateModel",
    "TrainConfig",
    "build_ensemble_reference",
    "confidence_region",
    "lotka_eval_points",
    "make_galton_dataset",
    "make_galton_reference_dataset",
    "make_lotka_dataset",
    "mse_log_ratio",
    "predict_log_ratio",
    "score_diagnostics",
    "train",
    "__version__",
]
