"""Method table: estimation strategies, their families, and default networks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import ConfigError
from ..netcore import NetworkSpec


@dataclass(frozen=True)
class MethodInfo:
    name: str
    family: str          # classifier | ratio | density | score
    default_alpha: float
    uses_alpha: bool
    description: str


METHODS = {
    "carl": MethodInfo("carl", "classifier", 0.0, False,
                       "parameterized classifier, ratio via (1-s)/s"),
    "cascal": MethodInfo("cascal", "classifier", 1.0, True,
                         "classifier plus score penalty on y=0 rows"),
    "rolr": MethodInfo("rolr", "ratio", 0.0, False,
                       "regression on the joint likelihood ratio"),
    "rascal": MethodInfo("rascal", "ratio", 5.0, True,
                         "ratio regression plus score penalty on y=0 rows"),
    "nde": MethodInfo("nde", "density", 0.0, False,
                      "conditional density estimation by maximum likelihood"),
    "scandal": MethodInfo("scandal", "density", 1.0, True,
                          "density estimation plus score penalty at theta_gen"),
    "sally": MethodInfo("sally", "score", 0.0, False,
                        "score regression at a fixed reference point"),
    "sallino": MethodInfo("sallino", "score", 0.0, False,
                          "score regression, read out through the scalar h = t.(theta0-theta1)"),
}


def get_method(name: str) -> MethodInfo:
    try:
        return METHODS[name.lower()]
    except KeyError:
        raise ConfigError(
            f"unknown method {name!r}; choose from {sorted(METHODS)}") from None


def resolve_alpha(method: MethodInfo, alpha) -> float:
    if alpha is None:
        return method.default_alpha
    alpha = float(alpha)
    if alpha < 0:
        raise ConfigError("alpha must be non-negative")
    if alpha > 0 and not method.uses_alpha:
        raise ConfigError(f"method {method.name} does not take a score-penalty weight")
    return alpha


def _loc_scale(column: np.ndarray):
    loc = column.mean(axis=0)
    scale = column.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    return tuple(loc), tuple(scale)


def default_spec(method: MethodInfo, dataset, hidden=None,
                 n_components: int = 10) -> NetworkSpec:
    """Network topology for a (method, dataset) pair; standardization
    constants come from the training data so they are deterministic."""
    x_dim = dataset.x.shape[1]
    d = dataset.theta_dim
    if hidden is None:
        hidden = (10,) if dataset.simulator == "galton" else (100,)
    hidden = tuple(int(h) for h in hidden)

    if method.family in ("classifier", "ratio"):
        x_loc, x_scale = _loc_scale(dataset.x)
        t_loc, t_scale = _loc_scale(dataset.theta0)
        return NetworkSpec(
            input_dim=x_dim + d, hidden=hidden, head="scalar", out_dim=1,
            theta_dim=d, theta_start=x_dim,
            input_loc=x_loc + t_loc, input_scale=x_scale + t_scale)

    if method.family == "density":
        t_loc, t_scale = _loc_scale(dataset.theta_gen)
        if dataset.simulator == "galton":
            n_bins = int(dataset.config["n_rows"]) + 1
            return NetworkSpec(
                input_dim=d, hidden=hidden, head="softmax", out_dim=n_bins,
                theta_dim=d, theta_start=0, input_loc=t_loc, input_scale=t_scale)
        x_loc, x_scale = _loc_scale(dataset.x)
        return NetworkSpec(
            input_dim=d, hidden=hidden, head="gaussian_mixture", out_dim=x_dim,
            n_components=n_components, theta_dim=d, theta_start=0,
            input_loc=t_loc, input_scale=t_scale,
            target_loc=x_loc, target_scale=x_scale)

    if method.family == "score":
        x_loc, x_scale = _loc_scale(dataset.x)
        return NetworkSpec(
            input_dim=x_dim, hidden=hidden, head="scalar", out_dim=d,
            input_loc=x_loc, input_scale=x_scale)

    raise ConfigError(f"unknown family {method.family!r}")
