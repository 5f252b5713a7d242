"""Trained surrogates and their likelihood-ratio / score read-outs."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import ReferenceMismatch
from ..netcore import NetworkSpec, forward, log_density, theta_gradient
from ..netcore.checkpoint import load_checkpoint, save_checkpoint
from .registry import get_method

REFERENCE_ATOL = 1e-9


@dataclass
class SurrogateModel:
    method: str
    alpha: float
    spec: NetworkSpec
    weights: np.ndarray
    theta1_ref: np.ndarray | None   # training reference, ratio-head models only
    meta: dict = field(default_factory=dict)

    @property
    def family(self) -> str:
        return get_method(self.method).family

    def weight_digest(self) -> str:
        return hashlib.sha256(self.weights.tobytes()).hexdigest()

    def save(self, path):
        meta = dict(self.meta)
        meta.update({
            "method": self.method,
            "alpha": self.alpha,
            "theta1_ref": None if self.theta1_ref is None
                          else [float(v) for v in self.theta1_ref],
        })
        save_checkpoint(path, self.spec, self.weights, meta=meta)

    @classmethod
    def load(cls, path) -> "SurrogateModel":
        doc = load_checkpoint(path)
        meta = doc["meta"]
        ref = meta.get("theta1_ref")
        return cls(method=meta["method"], alpha=meta.get("alpha", 0.0),
                   spec=doc["spec"], weights=doc["weights"],
                   theta1_ref=None if ref is None else np.asarray(ref, dtype=float),
                   meta=meta)


def _as_2d(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x[:, None] if x.ndim == 1 else x


def _broadcast_theta(theta, n, d) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.ndim <= 1:
        theta = theta.reshape(1, -1)
    if theta.shape[1] != d:
        raise ValueError(f"theta has {theta.shape[1]} components, expected {d}")
    return np.broadcast_to(theta, (n, d))


def _check_reference(model: SurrogateModel, theta1, n):
    ref = _broadcast_theta(model.theta1_ref, n, model.theta1_ref.size)
    theta1 = _broadcast_theta(theta1, n, ref.shape[1])
    if not np.allclose(theta1, ref, rtol=0.0, atol=REFERENCE_ATOL):
        raise ReferenceMismatch(
            f"{model.method} was trained against theta1={model.theta1_ref}; "
            "it cannot evaluate ratios against a different denominator")


def evaluate_log_ratio(model: SurrogateModel, x, theta0, theta1) -> np.ndarray:
    """log r(x | theta0, theta1) per sample under the model's read-out."""
    x = _as_2d(x)
    n = x.shape[0]
    family = model.family

    if family in ("classifier", "ratio"):
        _check_reference(model, theta1, n)
        d = model.spec.theta_dim
        inp = np.column_stack([x, _broadcast_theta(theta0, n, d)])
        v = forward(model.spec, model.weights, inp).v[:, 0]
        return -v if family == "classifier" else np.clip(v, -30.0, 30.0)

    if family == "density":
        d = model.spec.theta_dim
        t0 = _broadcast_theta(theta0, n, d)
        t1 = _broadcast_theta(theta1, n, d)
        return log_density_at(model, x, t0) - log_density_at(model, x, t1)

    raise ValueError(
        f"{model.method} has no direct ratio read-out; calibrate it first")


def log_density_at(model: SurrogateModel, x, theta) -> np.ndarray:
    x = _as_2d(x)
    n = x.shape[0]
    theta = _broadcast_theta(theta, n, model.spec.theta_dim)
    cache = forward(model.spec, model.weights, theta)
    target = x[:, 0].astype(int) if model.spec.head == "softmax" else x
    ld, _ = log_density(model.spec, cache.v, target)
    return ld


def predict_score(model: SurrogateModel, x, theta0=None) -> np.ndarray:
    """Estimated score, (n, d).

    Score-family models read their output head directly and ignore
    theta0; ratio and classifier families differentiate log r at theta0;
    density families differentiate log p at theta0.
    """
    x = _as_2d(x)
    n = x.shape[0]
    family = model.family

    if family == "score":
        return forward(model.spec, model.weights, x).v

    if theta0 is None:
        raise ValueError("theta0 is required for this model family")
    if family in ("classifier", "ratio"):
        d = model.spec.theta_dim
        inp = np.column_stack([x, _broadcast_theta(theta0, n, d)])
        sign = -1.0 if family == "classifier" else 1.0
        return theta_gradient(model.spec, model.weights, inp, sign=sign)

    theta = _broadcast_theta(theta0, n, model.spec.theta_dim)
    target = x[:, 0].astype(int) if model.spec.head == "softmax" else x
    return theta_gradient(model.spec, model.weights, theta, target=target)
