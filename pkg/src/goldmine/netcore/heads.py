"""Output heads: log-density values, head-space gradients, and Hessian products.

Score penalties differentiate the predicted theta-gradient, which for
every head takes the form that(x) = G(v) . vdot with G = d(log density)/dv
evaluated at the raw head outputs v. Reverse-mode through that
expression needs two ingredients per head, both supplied here:

* ``log_density``: per-sample value and G,
* ``hvp``: the Hessian-vector product u -> (d^2 log density / dv^2) u.

The scalar head carries no density; ratio losses use v directly and its
"G" is constant, so only softmax and gaussian_mixture appear here.
"""

from __future__ import annotations

import numpy as np

from .network import NetworkSpec

LOG_2PI = float(np.log(2.0 * np.pi))
SCALE_FLOOR = 1e-3


def _softmax(v):
    m = v.max(axis=1, keepdims=True)
    e = np.exp(v - m)
    return e / e.sum(axis=1, keepdims=True)


def _log_softmax(v):
    m = v.max(axis=1, keepdims=True)
    return v - m - np.log(np.exp(v - m).sum(axis=1, keepdims=True))


def _sigmoid(v):
    return 0.5 * (np.tanh(0.5 * v) + 1.0)


def _softplus(v):
    return np.logaddexp(0.0, v)


def _split_mixture(spec: NetworkSpec, v: np.ndarray):
    C, D = spec.n_components, spec.out_dim
    logits = v[:, :C]
    mu = v[:, C: C + C * D].reshape(-1, C, D)
    rho = v[:, C + C * D:].reshape(-1, C, D)
    return logits, mu, rho


def _mixture_parts(spec: NetworkSpec, v: np.ndarray, target: np.ndarray):
    """Shared intermediates for mixture value / gradient / Hessian product."""
    logits, mu, rho = _split_mixture(spec, v)
    u = (np.asarray(target, dtype=float) - np.asarray(spec.target_loc)) \
        / np.asarray(spec.target_scale)
    sig = _softplus(rho) + SCALE_FLOOR
    e = (u[:, None, :] - mu) / sig
    log_w = _log_softmax(logits)
    comp = log_w + np.sum(-0.5 * e * e - np.log(sig) - 0.5 * LOG_2PI, axis=2)
    m = comp.max(axis=1, keepdims=True)
    lse = m[:, 0] + np.log(np.exp(comp - m).sum(axis=1))
    resp = np.exp(comp - lse[:, None])
    return logits, mu, rho, sig, e, resp, lse


def log_density(spec: NetworkSpec, v: np.ndarray, target) -> tuple:
    """(log p, d log p / dv), both per sample.

    softmax: target is an integer bin index per sample. gaussian_mixture:
    target is a raw (unstandardized) vector per sample; the constant
    Jacobian of standardization is included in the value.
    """
    if spec.head == "softmax":
        idx = np.asarray(target, dtype=int)
        logp = _log_softmax(v)
        ld = logp[np.arange(v.shape[0]), idx]
        G = -np.exp(logp)
        G[np.arange(v.shape[0]), idx] += 1.0
        return ld, G

    if spec.head == "gaussian_mixture":
        _, _, rho, sig, e, resp, lse = _mixture_parts(spec, v, target)
        ld = lse - np.sum(np.log(spec.target_scale))
        w = resp  # responsibilities double as posterior weights
        g_logits = w - _softmax(_split_mixture(spec, v)[0])
        g_mu = w[:, :, None] * (e / sig)
        g_rho = w[:, :, None] * ((e * e - 1.0) / sig) * _sigmoid(rho)
        G = np.concatenate(
            [g_logits, g_mu.reshape(v.shape[0], -1), g_rho.reshape(v.shape[0], -1)],
            axis=1)
        return ld, G

    raise ValueError(f"head {spec.head!r} has no density read-out")


def hvp(spec: NetworkSpec, v: np.ndarray, target, u: np.ndarray) -> np.ndarray:
    """(d^2 log p / dv^2) u per sample, u of shape (n, head_width)."""
    if spec.head == "softmax":
        p = _softmax(v)
        # Hessian of v_y - logsumexp(v) is -(diag(p) - p p^T), target-free
        return -(p * u - p * np.sum(p * u, axis=1, keepdims=True))

    if spec.head == "gaussian_mixture":
        return _mixture_hvp(spec, v, target, u)

    raise ValueError(f"head {spec.head!r} has no density read-out")


def _mixture_hvp(spec: NetworkSpec, v: np.ndarray, target, uvec: np.ndarray):
    n = v.shape[0]
    C, D = spec.n_components, spec.out_dim
    logits, mu, rho, sig, e, resp, _ = _mixture_parts(spec, v, target)
    wmix = _softmax(logits)
    s = _sigmoid(rho)
    u_l = uvec[:, :C]
    u_m = uvec[:, C: C + C * D].reshape(n, C, D)
    u_r = uvec[:, C + C * D:].reshape(n, C, D)

    # Per-component gradient D_c of A_c = log w_c + log N_c, as three blocks:
    # logits block (delta_cj - w_j), mu block e/sig, rho block (e^2-1)/sig * s.
    d_mu = e / sig
    d_rho = (e * e - 1.0) / sig * s

    # Adot_c = D_c . u, one scalar per component.
    adot = (u_l - np.sum(wmix * u_l, axis=1, keepdims=True)
            + np.sum(d_mu * u_m + d_rho * u_r, axis=2))
    abar = np.sum(resp * adot, axis=1, keepdims=True)

    # Term 1: curvature of the logsumexp over components.
    coeff = resp * (adot - abar)
    t1_l = coeff - np.sum(coeff, axis=1, keepdims=True) * wmix
    t1_m = coeff[:, :, None] * d_mu
    t1_r = coeff[:, :, None] * d_rho

    # Term 2: within-component Hessians (Gaussian in mu and softplus scale).
    h_mm = -1.0 / (sig * sig)
    h_mr = (-2.0 * e / (sig * sig)) * s
    h_rr = ((1.0 - 3.0 * e * e) / (sig * sig)) * s * s \
        + ((e * e - 1.0) / sig) * s * (1.0 - s)
    t2_m = resp[:, :, None] * (h_mm * u_m + h_mr * u_r)
    t2_r = resp[:, :, None] * (h_mr * u_m + h_rr * u_r)

    # Term 3: Hessian of log softmax in the logits block.
    t3_l = -(wmix * u_l - wmix * np.sum(wmix * u_l, axis=1, keepdims=True))

    out_l = t1_l + t3_l
    out_m = (t1_m + t2_m).reshape(n, -1)
    out_r = (t1_r + t2_r).reshape(n, -1)
    return np.concatenate([out_l, out_m, out_r], axis=1)


def theta_gradient(spec: NetworkSpec, weights: np.ndarray, inp: np.ndarray,
                   target=None, sign: float = 1.0) -> np.ndarray:
    """Predicted score: d/d(theta) of the head read-out, shape (n, theta_dim).

    For the scalar head (out_dim 1) the read-out is sign * v itself, with
    sign=-1 covering classifier logits where log r = -v. Density heads
    differentiate log p(target | input)."""
    from .network import forward

    cache = forward(spec, weights, inp, tangents=True)
    if spec.head == "scalar":
        if spec.out_dim != 1:
            raise ValueError("theta gradient of a vector scalar head is ambiguous")
        return sign * cache.vdot[:, :, 0].T
    _, G = log_density(spec, cache.v, target)
    return np.stack(
        [np.sum(G * cache.vdot[k], axis=1) for k in range(spec.theta_dim)], axis=1)


def mixture_sample(spec: NetworkSpec, v: np.ndarray, seed: int) -> np.ndarray:
    """Draw one target vector per row of head outputs v."""
    rng = np.random.default_rng(seed)
    logits, mu, rho = _split_mixture(spec, v)
    sig = _softplus(rho) + SCALE_FLOOR
    w = _softmax(logits)
    n = v.shape[0]
    cum = np.cumsum(w, axis=1)
    comp = np.sum(rng.uniform(size=(n, 1)) > cum, axis=1).clip(0, spec.n_components - 1)
    rows = np.arange(n)
    z = rng.standard_normal((n, spec.out_dim))
    u = mu[rows, comp] + sig[rows, comp] * z
    return u * np.asarray(spec.target_scale) + np.asarray(spec.target_loc)
