"""Minibatch training with early stopping on a validation split.

Everything is deterministic in the seed: weight init uses one stream,
shuffling another, so identical (seed, spec, data order) reproduce the
same weights bit for bit. Validation uses 20% of the data by default;
candidate weights are tail-averaged over a short window of epochs, and
the best-validation candidate is restored at the end.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from ..exceptions import ConfigError
from ..netcore import AdamState, NetworkSpec, adam_step, init_weights
from .losses import FAMILY_LOSSES
from .registry import MethodInfo, default_spec, get_method, resolve_alpha
from .surrogate import SurrogateModel


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 128
    learning_rate: float = 1e-3
    validation_fraction: float = 0.2
    patience: int = 10
    average_window: int = 10    # epoch-end weights averaged per candidate

    def __post_init__(self):
        if not (0 <= self.validation_fraction < 1):
            raise ConfigError("validation_fraction must be in [0, 1)")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be positive")
        if self.average_window < 1:
            raise ConfigError("average_window must be positive")


def prepare_arrays(method: MethodInfo, dataset, spec: NetworkSpec,
                   alpha: float) -> dict:
    """Column views a loss family consumes, sliced per minibatch later."""
    arrays = {}
    if method.family in ("classifier", "ratio"):
        arrays["inp"] = np.column_stack([dataset.x, dataset.theta0])
        arrays["y"] = dataset.y
        arrays["logr"] = dataset.log_joint_ratio
        if alpha > 0:
            arrays["score"] = dataset.require_scores()
    elif method.family == "density":
        arrays["inp"] = dataset.theta_gen
        arrays["target"] = (dataset.x[:, 0].astype(int)
                            if spec.head == "softmax" else dataset.x)
        if alpha > 0:
            arrays["score"] = dataset.require_scores()
    elif method.family == "score":
        arrays["inp"] = dataset.x
        arrays["score"] = dataset.require_scores()
    else:
        raise ConfigError(f"unknown family {method.family}")
    return arrays


def _slice(arrays: dict, idx) -> dict:
    return {k: v[idx] for k, v in arrays.items()}


def train(method_name: str, dataset, spec: NetworkSpec | None = None,
          alpha: float | None = None, config: TrainConfig | None = None,
          seed: int = 0, hidden=None) -> SurrogateModel:
    method = get_method(method_name)
    alpha = resolve_alpha(method, alpha)
    config = config or TrainConfig()
    if spec is None:
        spec = default_spec(method, dataset, hidden=hidden)
    loss_fn = FAMILY_LOSSES[method.family]
    arrays = prepare_arrays(method, dataset, spec, alpha)
    n = dataset.n
    if n < 2:
        raise ConfigError("training needs at least 2 samples")

    shuffle_rng = np.random.default_rng([seed, 1])
    perm = shuffle_rng.permutation(n)
    n_val = int(round(config.validation_fraction * n))
    val_idx, train_idx = perm[:n_val], perm[n_val:]
    if train_idx.size == 0:
        raise ConfigError("validation split left no training data")
    val_arrays = _slice(arrays, val_idx) if n_val else None

    w = init_weights(spec, [seed, 0])
    opt = AdamState.zeros(w.size)
    train_curve, val_curve = [], []
    best_w, best_val, best_epoch = w.copy(), np.inf, -1
    saturated = 0

    # Candidate weights are the running average of the last few epoch-end
    # iterates; averaging cancels the optimizer's stationary jitter around
    # a minimum, which with a constant learning rate otherwise dominates
    # late-training progress.
    tail = deque(maxlen=config.average_window)
    stalled = 0
    for epoch in range(config.epochs):
        order = shuffle_rng.permutation(train_idx)
        total, seen = 0.0, 0
        for lo in range(0, order.size, config.batch_size):
            idx = order[lo: lo + config.batch_size]
            loss, grad, aux = loss_fn(spec, w, _slice(arrays, idx), alpha)
            w = adam_step(opt, w, grad, config.learning_rate)
            total += loss * idx.size
            seen += idx.size
            saturated += aux.get("saturated", 0)
        train_curve.append(total / seen)
        tail.append(w.copy())
        candidate = np.mean(tail, axis=0)

        if n_val:
            # Validation tracks the base task loss; the score penalty is a
            # training-time auxiliary and is excluded from model selection,
            # the same way weight decay is left out of validation metrics.
            vloss, _, _ = loss_fn(spec, candidate, val_arrays, 0.0,
                                  want_grad=False)
            val_curve.append(vloss)
            if vloss < best_val:
                best_val, best_w, best_epoch = vloss, candidate, epoch
                stalled = 0
            else:
                stalled += 1
                if stalled >= config.patience:
                    break
        else:
            best_w, best_epoch = candidate, epoch

    theta1_ref = None
    if method.family in ("classifier", "ratio"):
        theta1_ref = dataset.theta1[0].copy()
        if not np.allclose(dataset.theta1, theta1_ref[None, :]):
            raise ConfigError(
                "ratio-head training requires a single shared theta1 reference")

    meta = {
        "seed": seed,
        "n_train": int(n),
        "simulator": dataset.simulator,
        "dataset_digest": dataset.records_digest(),
        "train_loss": [float(v) for v in train_curve],
        "val_loss": [float(v) for v in val_curve],
        "best_epoch": int(best_epoch),
        "saturated": int(saturated),
        "hyper": {"epochs": config.epochs, "batch_size": config.batch_size,
                  "learning_rate": config.learning_rate,
                  "validation_fraction": config.validation_fraction,
                  "patience": config.patience,
                  "average_window": config.average_window},
    }
    return SurrogateModel(method=method.name, alpha=alpha, spec=spec,
                          weights=best_w, theta1_ref=theta1_ref, meta=meta)
