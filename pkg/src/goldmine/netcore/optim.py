"""Adam with bias correction; state is plain arrays so checkpoints stay JSON."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, n: int, **kw) -> "AdamState":
        return cls(m=np.zeros(n), v=np.zeros(n), **kw)


def adam_step(state: AdamState, weights: np.ndarray, grad: np.ndarray,
              lr: float) -> np.ndarray:
    """One update; mutates ``state``, returns the new weight vector."""
    state.t += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    mhat = state.m / (1.0 - state.beta1 ** state.t)
    vhat = state.v / (1.0 - state.beta2 ** state.t)
    return weights - lr * mhat / (np.sqrt(vhat) + state.eps)
