"""Training losses for the four surrogate families.

Four families cover the eight strategies; the score-augmented variants
are the alpha > 0 members, and the alpha = 0 branch runs exactly the
plain code path so the reductions hold bit for bit:

* classifier: cross-entropy on a logit v with s = sigmoid(v), so the
  ratio read-out is log r = -v. With alpha > 0 the predicted score
  -d v/d(theta0) is pulled toward the joint score on y=0 rows.
* ratio: scalar head is log r directly; the printed loss compares r and
  1/r in linear space, so the head is exponentiated under a +-30 clamp
  (saturations are counted, their gradient is zero).
* density: softmax or mixture head maximum likelihood; with alpha > 0
  the theta-gradient of log p at each sample's generating point is
  pulled toward the joint score (all rows).
* score: plain mean squared error of a vector output against the joint
  score at a fixed reference.

Each function returns (loss, grad-or-None, aux). Gradients of the
penalties go through the reverse-over-forward path of the network
engine: head adjoints vbar pick up Hessian-vector products of the head
log-density, dual adjoints vdotbar pick up its gradient.
"""

from __future__ import annotations

import numpy as np

from ..exceptions import NonFiniteLoss
from ..netcore import backward, forward, hvp, log_density
from ..netcore.heads import _sigmoid, _softplus

LOG_RATIO_CLAMP = 30.0


def _check_finite(loss: float, what: str) -> float:
    if not np.isfinite(loss):
        raise NonFiniteLoss(f"{what} loss became non-finite")
    return float(loss)


def classifier_loss(spec, w, batch, alpha, want_grad=True):
    inp, y = batch["inp"], batch["y"]
    n = inp.shape[0]
    yf = y.astype(float)
    with_pen = alpha > 0
    cache = forward(spec, w, inp, tangents=with_pen)
    v = cache.v[:, 0]
    loss = np.mean(yf * _softplus(-v) + (1.0 - yf) * _softplus(v))
    aux = {}

    diff = None
    if with_pen:
        that = -cache.vdot[:, :, 0].T            # log r = -v
        diff = (that - batch["score"]) * (y == 0)[:, None]
        loss = loss + alpha * np.sum(diff * diff) / n
    loss = _check_finite(loss, "classifier")
    if not want_grad:
        return loss, None, aux

    vbar = ((_sigmoid(v) - yf) / n)[:, None]
    vdotbar = None
    if with_pen:
        vdotbar = -(2.0 * alpha / n) * diff.T[:, :, None]
    return loss, backward(spec, w, cache, vbar, vdotbar), aux


def ratio_loss(spec, w, batch, alpha, want_grad=True):
    inp, y = batch["inp"], batch["y"]
    n = inp.shape[0]
    yf = y.astype(float)
    with_pen = alpha > 0
    cache = forward(spec, w, inp, tangents=with_pen)
    v = cache.v[:, 0]
    vc = np.clip(v, -LOG_RATIO_CLAMP, LOG_RATIO_CLAMP)
    live = (np.abs(v) <= LOG_RATIO_CLAMP).astype(float)
    aux = {"saturated": int(n - live.sum())}

    r = np.exp(batch["logr"])
    inv_r = np.exp(-batch["logr"])
    ev = np.exp(vc)
    emv = np.exp(-vc)
    loss = np.mean(yf * (r - ev) ** 2 + (1.0 - yf) * (inv_r - emv) ** 2)

    diff = None
    if with_pen:
        that = cache.vdot[:, :, 0].T
        diff = (that - batch["score"]) * (y == 0)[:, None]
        loss = loss + alpha * np.sum(diff * diff) / n
    loss = _check_finite(loss, "ratio")
    if not want_grad:
        return loss, None, aux

    dv = (yf * 2.0 * (ev - r) * ev + (1.0 - yf) * 2.0 * (inv_r - emv) * emv) * live / n
    vbar = dv[:, None]
    vdotbar = None
    if with_pen:
        vdotbar = (2.0 * alpha / n) * diff.T[:, :, None]
    return loss, backward(spec, w, cache, vbar, vdotbar), aux


def density_loss(spec, w, batch, alpha, want_grad=True):
    inp, target = batch["inp"], batch["target"]
    n = inp.shape[0]
    with_pen = alpha > 0
    cache = forward(spec, w, inp, tangents=with_pen)
    ld, G = log_density(spec, cache.v, target)
    loss = -np.mean(ld)
    aux = {}

    diff = None
    if with_pen:
        that = np.stack(
            [np.sum(G * cache.vdot[k], axis=1) for k in range(spec.theta_dim)], axis=1)
        diff = that - batch["score"]
        loss = loss + alpha * np.sum(diff * diff) / n
    loss = _check_finite(loss, "density")
    if not want_grad:
        return loss, None, aux

    vbar = -G / n
    vdotbar = None
    if with_pen:
        c = (2.0 * alpha / n) * diff
        vdotbar = np.empty((spec.theta_dim, n, cache.v.shape[1]))
        for k in range(spec.theta_dim):
            vbar = vbar + c[:, k: k + 1] * hvp(spec, cache.v, target, cache.vdot[k])
            vdotbar[k] = c[:, k: k + 1] * G
    return loss, backward(spec, w, cache, vbar, vdotbar), aux


def score_loss(spec, w, batch, alpha, want_grad=True):
    inp, target = batch["inp"], batch["score"]
    n, d = target.shape
    cache = forward(spec, w, inp)
    diff = cache.v - target
    loss = _check_finite(np.sum(diff * diff) / (n * d), "score")
    if not want_grad:
        return loss, None, {}
    return loss, backward(spec, w, cache, 2.0 * diff / (n * d)), {}


FAMILY_LOSSES = {
    "classifier": classifier_loss,
    "ratio": ratio_loss,
    "density": density_loss,
    "score": score_loss,
}
