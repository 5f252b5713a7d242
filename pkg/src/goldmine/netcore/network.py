"""Dense tanh networks with reverse-mode and forward-mode derivatives.

All arithmetic is float64 numpy. A network is a flat weight vector plus
a NetworkSpec describing layer widths, the output head, input
standardization constants, and which input columns hold the parameter
vector theta. Three derivative paths are provided:

* ``backward``             d(loss)/d(weights) for any head adjoint,
* forward tangents         d(head outputs)/d(theta_k) via dual numbers,
* ``backward`` with dual adjoints   d/d(weights) of functions of those
  theta-derivatives (reverse-over-forward), which is what score
  penalties need.

The tanh recurrences: with a = tanh(z) and forward duals
adot = (1 - a^2) zdot, the reverse pass maps adjoints (abar, adotbar)
to zbar = (1-a^2) (abar - 2 a sum_k adotbar_k zdot_k) and
zdotbar_k = (1-a^2) adotbar_k.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _as_float_tuple(x, n, default):
    if x is None:
        return (float(default),) * n
    x = tuple(float(v) for v in np.asarray(x, dtype=float).reshape(-1))
    if len(x) != n:
        raise ValueError(f"expected {n} standardization constants, got {len(x)}")
    return x


@dataclass(frozen=True)
class NetworkSpec:
    """Topology, head, and standardization constants (not trained).

    head is one of:
      * "scalar":           out_dim raw outputs (log r, logit, or score vector)
      * "softmax":          out_dim logits, read out as log-probabilities
      * "gaussian_mixture": n_components diagonal Gaussians over out_dim target
                            dims; raw outputs are [logits, means, raw scales]

    theta_dim columns of the input starting at theta_start are treated
    as the parameter point for forward-mode theta derivatives.
    """

    input_dim: int
    hidden: tuple = (10,)
    head: str = "scalar"
    out_dim: int = 1
    n_components: int = 0
    theta_dim: int = 0
    theta_start: int = 0
    input_loc: tuple = None
    input_scale: tuple = None
    target_loc: tuple = None
    target_scale: tuple = None

    def __post_init__(self):
        if self.head not in ("scalar", "softmax", "gaussian_mixture"):
            raise ValueError(f"unknown head {self.head!r}")
        if self.head == "softmax" and self.out_dim < 2:
            raise ValueError("softmax head needs out_dim >= 2")
        if self.head == "gaussian_mixture" and self.n_components < 1:
            raise ValueError("gaussian_mixture head needs n_components >= 1")
        if any(h < 1 for h in self.hidden):
            raise ValueError("hidden widths must be >= 1")
        if self.theta_dim and not (0 <= self.theta_start
                                   and self.theta_start + self.theta_dim <= self.input_dim):
            raise ValueError("theta slice outside the input")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        object.__setattr__(self, "input_loc",
                           _as_float_tuple(self.input_loc, self.input_dim, 0.0))
        object.__setattr__(self, "input_scale",
                           _as_float_tuple(self.input_scale, self.input_dim, 1.0))
        if any(s <= 0 for s in self.input_scale):
            raise ValueError("input_scale must be positive")
        if self.head == "gaussian_mixture":
            object.__setattr__(self, "target_loc",
                               _as_float_tuple(self.target_loc, self.out_dim, 0.0))
            object.__setattr__(self, "target_scale",
                               _as_float_tuple(self.target_scale, self.out_dim, 1.0))
            if any(s <= 0 for s in self.target_scale):
                raise ValueError("target_scale must be positive")

    @property
    def head_width(self) -> int:
        if self.head == "gaussian_mixture":
            return self.n_components * (1 + 2 * self.out_dim)
        return self.out_dim

    @property
    def layer_dims(self) -> tuple:
        return (self.input_dim, *self.hidden, self.head_width)

    @property
    def n_weights(self) -> int:
        dims = self.layer_dims
        return sum(dims[i + 1] * dims[i] + dims[i + 1] for i in range(len(dims) - 1))

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim, "hidden": list(self.hidden),
            "head": self.head, "out_dim": self.out_dim,
            "n_components": self.n_components,
            "theta_dim": self.theta_dim, "theta_start": self.theta_start,
            "input_loc": list(self.input_loc), "input_scale": list(self.input_scale),
            "target_loc": None if self.target_loc is None else list(self.target_loc),
            "target_scale": None if self.target_scale is None else list(self.target_scale),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkSpec":
        d = dict(d)
        d["hidden"] = tuple(d["hidden"])
        return cls(**d)


def unpack_layers(spec: NetworkSpec, weights: np.ndarray):
    """Views (W, b) per layer into the flat vector, W of shape (out, in)."""
    dims = spec.layer_dims
    layers = []
    off = 0
    for i in range(len(dims) - 1):
        fan_in, fan_out = dims[i], dims[i + 1]
        W = weights[off: off + fan_out * fan_in].reshape(fan_out, fan_in)
        off += fan_out * fan_in
        b = weights[off: off + fan_out]
        off += fan_out
        layers.append((W, b))
    return layers


def init_weights(spec: NetworkSpec, seed: int) -> np.ndarray:
    """Glorot-uniform weights, zero biases, deterministic in the seed."""
    rng = np.random.default_rng(seed)
    w = np.zeros(spec.n_weights)
    dims = spec.layer_dims
    off = 0
    for i in range(len(dims) - 1):
        fan_in, fan_out = dims[i], dims[i + 1]
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        w[off: off + fan_out * fan_in] = rng.uniform(-bound, bound, fan_out * fan_in)
        off += fan_out * fan_in + fan_out
    return w


@dataclass
class ForwardCache:
    """Activations (and tangents when requested) kept for the reverse pass."""

    a: list          # a[0] standardized input .. a[L] last hidden, (n, width)
    v: np.ndarray    # raw head outputs (n, head_width)
    adot: list = None  # adot[k][l] (n, width) per theta component k
    zdot: list = None  # zdot[k][l] pre-activation tangents, hidden layers only
    vdot: np.ndarray = None  # (d, n, head_width)


def forward(spec: NetworkSpec, weights: np.ndarray, inp: np.ndarray,
            tangents: bool = False) -> ForwardCache:
    """Forward pass; with ``tangents`` also push theta duals through.

    ``inp`` is raw (unstandardized), shape (n, input_dim). The k-th dual
    is seeded with d(standardized input)/d(theta_k) = e_k / input_scale.
    """
    inp = np.asarray(inp, dtype=float)
    if inp.ndim != 2 or inp.shape[1] != spec.input_dim:
        raise ValueError(f"input shape {inp.shape} does not match input_dim {spec.input_dim}")
    loc = np.asarray(spec.input_loc)
    scale = np.asarray(spec.input_scale)
    a = (inp - loc) / scale
    layers = unpack_layers(spec, weights)
    acts = [a]
    n = inp.shape[0]

    adot = zdot = vdot = None
    if tangents:
        if spec.theta_dim < 1:
            raise ValueError("network spec has no theta slice")
        d = spec.theta_dim
        adot = [[None] * (len(spec.hidden) + 1) for _ in range(d)]
        zdot = [[None] * len(spec.hidden) for _ in range(d)]
        for k in range(d):
            seed = np.zeros((n, spec.input_dim))
            seed[:, spec.theta_start + k] = 1.0 / scale[spec.theta_start + k]
            adot[k][0] = seed

    for li, (W, b) in enumerate(layers[:-1]):
        z = acts[-1] @ W.T + b
        a = np.tanh(z)
        if tangents:
            one_m = 1.0 - a * a
            for k in range(spec.theta_dim):
                zd = adot[k][li] @ W.T
                zdot[k][li] = zd
                adot[k][li + 1] = one_m * zd
        acts.append(a)

    W, b = layers[-1]
    v = acts[-1] @ W.T + b
    if tangents:
        vdot = np.stack([adot[k][len(spec.hidden)] @ W.T for k in range(spec.theta_dim)])
    return ForwardCache(a=acts, v=v, adot=adot, zdot=zdot, vdot=vdot)


def backward(spec: NetworkSpec, weights: np.ndarray, cache: ForwardCache,
             vbar: np.ndarray, vdotbar: np.ndarray = None) -> np.ndarray:
    """Weight gradient of sum_i f_i given head adjoints.

    ``vbar`` is df/dv (n, head_width). For losses that also depend on
    the theta duals, ``vdotbar`` (d, n, head_width) carries df/dvdot and
    the cache must have been built with tangents=True.
    """
    layers = unpack_layers(spec, weights)
    L = len(spec.hidden)
    d = spec.theta_dim if vdotbar is not None else 0
    grad = np.zeros_like(weights)
    gl = unpack_layers(spec, grad)

    W, _ = layers[-1]
    gW, gb = gl[-1]
    gW += vbar.T @ cache.a[L]
    gb += vbar.sum(axis=0)
    abar = vbar @ W
    adotbar = [vdotbar[k] @ W for k in range(d)]
    if d:
        for k in range(d):
            gW += vdotbar[k].T @ cache.adot[k][L]

    for li in range(L - 1, -1, -1):
        a = cache.a[li + 1]
        one_m = 1.0 - a * a
        if d:
            sprod = np.zeros_like(a)
            for k in range(d):
                sprod += adotbar[k] * cache.zdot[k][li]
            zbar = one_m * (abar - 2.0 * a * sprod)
            zdotbar = [one_m * adotbar[k] for k in range(d)]
        else:
            zbar = one_m * abar
        W, _ = layers[li]
        gW, gb = gl[li]
        gW += zbar.T @ cache.a[li]
        gb += zbar.sum(axis=0)
        if d:
            for k in range(d):
                gW += zdotbar[k].T @ cache.adot[k][li]
        abar = zbar @ W
        if d:
            adotbar = [zdotbar[k] @ W for k in range(d)]
    return grad
