"""Numpy network engine: dense tanh nets, three heads, three gradient paths."""

from .heads import (
    hvp,
    log_density,
    mixture_sample,
    theta_gradient,
)
from .network import (
    ForwardCache,
    NetworkSpec,
    backward,
    forward,
    init_weights,
    unpack_layers,
)
from .optim import AdamState, adam_step

__all__ = [
    "AdamState",
    "ForwardCache",
    "NetworkSpec",
    "adam_step",
    "backward",
    "forward",
    "hvp",
    "init_weights",
    "log_density",
    "mixture_sample",
    "theta_gradient",
    "unpack_layers",
]
