"""Scikit-learn style front end for the surrogate training layer.

Thin adapters: hyperparameters are constructor arguments (so get_params /
set_params / clone work as usual), fit() hands an augmented Dataset to the
method registry, and the fitted surrogate lands in trailing-underscore
attributes. Two estimators cover the method families:

* RatioEstimator: the global strategies (classifier, ratio-regression and
  density methods) whose predictions are log r(x|theta0, theta1) surfaces.
* LocalRatioEstimator: score regression at a fixed reference point,
  optionally calibrated into likelihood ratios by histogramming the
  predicted score (or its projection) under both hypotheses.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .data import Dataset
from .exceptions import ConfigError, DataError
from .methods import (TrainConfig, calibrate_local, evaluate_log_ratio,
                      log_density_at, predict_score, train)
from .methods.registry import get_method


def _require_dataset(dataset):
    if not isinstance(dataset, Dataset):
        raise DataError(
            f"fit expects a goldmine Dataset, got {type(dataset).__name__}")
    return dataset


class _TrainedMixin:
    """Shared plumbing for estimators whose state is a SurrogateModel."""

    def _train_config(self) -> TrainConfig:
        return TrainConfig(epochs=self.epochs, batch_size=self.batch_size,
                           learning_rate=self.learning_rate,
                           validation_fraction=self.validation_fraction,
                           patience=self.patience)

    def _check_x(self, X) -> np.ndarray:
        check_is_fitted(self, "model_")
        X = check_array(X, ensure_2d=False, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.shape[1] != self.n_features_in_:
            raise DataError(
                f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X


class RatioEstimator(BaseEstimator, _TrainedMixin):
    """Global likelihood-ratio surrogate.

    Parameters
    ----------
    method : str
        One of carl, cascal, rolr, rascal, nde, scandal. The classifier
        and ratio methods read (x, theta0) and emit log r against the
        fixed theta1 of the training data; the density methods model
        p(x|theta) directly and take ratios of two evaluations.
    alpha : float or None
        Score-penalty weight for the augmented methods; None picks the
        per-method default.
    hidden : tuple or None
        Hidden layer widths; None picks the per-simulator default.
    seed : int
        Controls weight init and minibatch shuffling.
    """

    def __init__(self, method="rascal", alpha=None, hidden=None, epochs=100,
                 batch_size=128, learning_rate=1e-3, validation_fraction=0.2,
                 patience=10, seed=0):
        self.method = method
        self.alpha = alpha
        self.hidden = hidden
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.validation_fraction = validation_fraction
        self.patience = patience
        self.seed = seed

    def fit(self, dataset, y=None):
        dataset = _require_dataset(dataset)
        info = get_method(self.method)
        if info.family == "score":
            raise ConfigError(
                f"{self.method} is a local score method; use LocalRatioEstimator")
        self.model_ = train(self.method, dataset, alpha=self.alpha,
                            config=self._train_config(), seed=self.seed,
                            hidden=self.hidden)
        self.n_features_in_ = dataset.x.shape[1]
        return self

    def predict_log_ratio(self, X, theta0, theta1) -> np.ndarray:
        X = self._check_x(X)
        return evaluate_log_ratio(self.model_, X, theta0, theta1)

    def predict_ratio(self, X, theta0, theta1) -> np.ndarray:
        return np.exp(self.predict_log_ratio(X, theta0, theta1))

    def predict_log_density(self, X, theta) -> np.ndarray:
        X = self._check_x(X)
        if self.model_.family != "density":
            raise ConfigError(
                f"{self.method} has no density head; only nde/scandal do")
        return log_density_at(self.model_, X, theta)

    def predict_score(self, X, theta=None) -> np.ndarray:
        X = self._check_x(X)
        return predict_score(self.model_, X, theta)


class LocalRatioEstimator(BaseEstimator, _TrainedMixin):
    """Score regression at a reference point, calibrated into ratios.

    fit() trains the score network on an augmented dataset simulated at
    the reference parameters. calibrate() then histograms the predicted
    score (sally) or its scalar projection onto theta0 - theta1 (sallino)
    under both hypotheses, after which predict_log_ratio() is available.
    """

    def __init__(self, method="sally", hidden=None, epochs=100,
                 batch_size=128, learning_rate=1e-3, validation_fraction=0.2,
                 patience=10, seed=0, n_calibration=10_000, n_bins=20):
        self.method = method
        self.hidden = hidden
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.validation_fraction = validation_fraction
        self.patience = patience
        self.seed = seed
        self.n_calibration = n_calibration
        self.n_bins = n_bins

    def fit(self, dataset, y=None):
        dataset = _require_dataset(dataset)
        info = get_method(self.method)
        if info.family != "score":
            raise ConfigError(
                f"{self.method} is a global method; use RatioEstimator")
        # sally and sallino share the score network; they differ in the
        # calibration space, handled below.
        self.model_ = train("sally", dataset, config=self._train_config(),
                            seed=self.seed, hidden=self.hidden)
        self.n_features_in_ = dataset.x.shape[1]
        return self

    def predict_score(self, X) -> np.ndarray:
        X = self._check_x(X)
        return predict_score(self.model_, X)

    def calibrate(self, sampler, theta0, theta1, base_seed=0):
        """Fit the two calibration histograms.

        sampler(theta, n, seed) must return n observables drawn at theta;
        both hypotheses reuse the same seed, so theta0 = theta1 yields a
        calibrated ratio that is exactly 1.
        """
        check_is_fitted(self, "model_")
        self.calibration_ = calibrate_local(
            self.model_, sampler, theta0, theta1, n_sims=self.n_calibration,
            base_seed=base_seed, kind=self.method, n_bins=self.n_bins)
        return self

    def predict_log_ratio(self, X) -> np.ndarray:
        check_is_fitted(self, "calibration_")
        X = self._check_x(X)
        return self.calibration_.predict_log_ratio(X)
