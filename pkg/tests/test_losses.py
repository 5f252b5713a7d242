"""Loss functions: gradients, reductions, and minimizer soundness.

The minimizer tests build tiny discrete problems whose population loss
is representable exactly as a finite batch (probabilities with small
denominators become row multiplicities), so the empirical minimizer can
be compared against the known conditional-expectation target after
optimizing the real network with L-BFGS.
"""

import numpy as np
import pytest
from scipy.optimize import minimize

from goldmine.exceptions import NonFiniteLoss
from goldmine.methods.losses import (LOG_RATIO_CLAMP, classifier_loss,
                                     density_loss, ratio_loss, score_loss)
from goldmine.netcore import NetworkSpec, forward, init_weights


def fit(loss_fn, spec, batch, alpha=0.0, seed=0, maxiter=600):
    w0 = init_weights(spec, seed)

    def obj(w):
        loss, grad, _ = loss_fn(spec, w, batch, alpha)
        return loss, grad

    res = minimize(obj, w0, jac=True, method="L-BFGS-B",
                   options={"maxiter": maxiter, "ftol": 1e-14, "gtol": 1e-12})
    return res.x


def fd_check(loss_fn, spec, batch, alpha, seed=0, n_coords=25, rel=1e-4):
    rng = np.random.default_rng(seed)
    w = init_weights(spec, seed) + 0.05 * rng.standard_normal(spec.n_weights)
    _, grad, _ = loss_fn(spec, w, batch, alpha)
    h = 1e-6
    coords = rng.choice(spec.n_weights, size=min(n_coords, spec.n_weights),
                        replace=False)
    for j in coords:
        wp, wm = w.copy(), w.copy()
        wp[j] += h
        wm[j] -= h
        fd = (loss_fn(spec, wp, batch, alpha)[0]
              - loss_fn(spec, wm, batch, alpha)[0]) / (2 * h)
        assert grad[j] == pytest.approx(fd, rel=rel, abs=1e-7)


def ratio_spec(hidden=(16,)):
    return NetworkSpec(input_dim=2, hidden=hidden, head="scalar", out_dim=1,
                       theta_dim=1, theta_start=1,
                       input_loc=(1.0, -0.8), input_scale=(1.0, 1.0))


def _rows(entries):
    """Expand (x, y, logr, score, count) tuples into batch columns."""
    inp, y, logr, score = [], [], [], []
    for xv, yv, lr, sc, cnt in entries:
        for _ in range(cnt):
            inp.append([xv, -0.8])
            y.append(yv)
            logr.append(lr)
            score.append([sc])
    return {"inp": np.array(inp, dtype=float), "y": np.array(y),
            "logr": np.array(logr, dtype=float),
            "score": np.array(score, dtype=float)}


# marginals used by the classifier and ratio toys: r*(x) = p0(x)/p1(x)
P0 = np.array([2, 4, 2]) / 8.0
P1 = np.array([4, 2, 2]) / 8.0


def classifier_toy():
    entries = []
    for xv in range(3):
        entries.append((xv, 1, 0.0, 0.0, int(16 * P1[xv])))
        entries.append((xv, 0, 0.0, 0.0, int(16 * P0[xv])))
    return _rows(entries)


def ratio_toy():
    # latent spread: joint ratios average to r* on y=1 rows, joint inverse
    # ratios average to 1/r* on y=0 rows, each split into two equal halves
    entries = []
    gamma = 0.5
    for xv in range(3):
        rstar = P0[xv] / P1[xv]
        n1 = int(16 * P1[xv])
        for r in (rstar * (1 + gamma), rstar * (1 - gamma)):
            entries.append((xv, 1, np.log(r), 0.0, n1 // 2))
        n0 = int(16 * P0[xv])
        for inv in ((1 + gamma) / rstar, (1 - gamma) / rstar):
            entries.append((xv, 0, -np.log(inv), 0.0, n0 // 2))
    return _rows(entries)


def test_classifier_minimizer_is_the_marginal_ratio():
    spec = ratio_spec()
    batch = classifier_toy()
    w = fit(classifier_loss, spec, batch)
    v = forward(spec, w, np.array([[0.0, -0.8], [1.0, -0.8], [2.0, -0.8]])).v[:, 0]
    # log r read-out is -v
    assert np.allclose(-v, np.log(P0 / P1), atol=0.02)


def test_ratio_minimizer_is_the_conditional_expectation():
    spec = ratio_spec()
    batch = ratio_toy()
    w = fit(ratio_loss, spec, batch)
    v = forward(spec, w, np.array([[0.0, -0.8], [1.0, -0.8], [2.0, -0.8]])).v[:, 0]
    assert np.allclose(np.exp(v), P0 / P1, atol=0.02)


def test_density_minimizer_matches_frequencies():
    spec = NetworkSpec(input_dim=1, hidden=(8,), head="softmax", out_dim=3,
                       theta_dim=1, theta_start=0, input_loc=(-0.8,))
    freq = np.array([3, 2, 3]) / 8.0
    target = np.repeat(np.arange(3), (8 * freq).astype(int))
    batch = {"inp": np.full((target.size, 1), -0.8), "target": target}
    w = fit(density_loss, spec, batch)
    from goldmine.netcore import log_density
    v = forward(spec, w, np.full((3, 1), -0.8)).v
    lp, _ = log_density(spec, v, np.arange(3))
    assert np.allclose(np.exp(lp), freq, atol=0.01)


def test_score_minimizer_is_the_conditional_mean():
    spec = NetworkSpec(input_dim=1, hidden=(8,), head="scalar", out_dim=2,
                       input_loc=(0.5,))
    batch = {
        "inp": np.array([[0.0], [0.0], [1.0], [1.0]]),
        "score": np.array([[1.0, 0.0], [3.0, 2.0], [-1.0, 1.0], [1.0, 3.0]]),
    }
    w = fit(score_loss, spec, batch)
    out = forward(spec, w, np.array([[0.0], [1.0]])).v
    assert np.allclose(out, [[2.0, 1.0], [0.0, 2.0]], atol=0.01)


def test_classifier_loss_at_zero_weights_is_log2():
    spec = ratio_spec()
    batch = classifier_toy()
    loss, _, _ = classifier_loss(spec, np.zeros(spec.n_weights), batch, 0.0)
    assert loss == pytest.approx(np.log(2.0), abs=1e-12)


@pytest.mark.parametrize("alpha", [0.0, 2.5])
def test_classifier_gradient_fd(alpha):
    fd_check(classifier_loss, ratio_spec(hidden=(6,)), classifier_toy(), alpha)


@pytest.mark.parametrize("alpha", [0.0, 2.5])
def test_ratio_gradient_fd(alpha):
    fd_check(ratio_loss, ratio_spec(hidden=(6,)), ratio_toy(), alpha)


@pytest.mark.parametrize("alpha", [0.0, 1.5])
def test_density_gradient_fd_softmax(alpha):
    spec = NetworkSpec(input_dim=1, hidden=(6,), head="softmax", out_dim=4,
                       theta_dim=1, theta_start=0)
    rng = np.random.default_rng(4)
    batch = {"inp": rng.standard_normal((10, 1)),
             "target": rng.integers(0, 4, size=10),
             "score": rng.standard_normal((10, 1))}
    fd_check(density_loss, spec, batch, alpha)


@pytest.mark.parametrize("alpha", [0.0, 1.5])
def test_density_gradient_fd_mixture(alpha):
    spec = NetworkSpec(input_dim=2, hidden=(5,), head="gaussian_mixture",
                       out_dim=2, n_components=3, theta_dim=2, theta_start=0,
                       target_loc=(0.5, -1.0), target_scale=(2.0, 0.5))
    rng = np.random.default_rng(5)
    batch = {"inp": rng.standard_normal((8, 2)),
             "target": rng.standard_normal((8, 2)),
             "score": rng.standard_normal((8, 2))}
    fd_check(density_loss, spec, batch, alpha, rel=2e-4)


def test_score_gradient_fd():
    spec = NetworkSpec(input_dim=2, hidden=(6,), head="scalar", out_dim=3)
    rng = np.random.default_rng(6)
    batch = {"inp": rng.standard_normal((9, 2)),
             "score": rng.standard_normal((9, 3))}
    fd_check(score_loss, spec, batch, 0.0)


@pytest.mark.parametrize("loss_fn,make_batch", [
    (classifier_loss, classifier_toy),
    (ratio_loss, ratio_toy),
])
def test_alpha_zero_reduces_to_base_loss(loss_fn, make_batch):
    spec = ratio_spec(hidden=(6,))
    batch = make_batch()
    rng = np.random.default_rng(7)
    w = init_weights(spec, 7) + 0.1 * rng.standard_normal(spec.n_weights)
    stripped = {k: v for k, v in batch.items() if k != "score"}
    l0, g0, _ = loss_fn(spec, w, batch, 0.0)
    l1, g1, _ = loss_fn(spec, w, stripped, 0.0)
    assert l0 == l1
    assert np.array_equal(g0, g1)


def test_penalty_vanishes_when_prediction_matches_score():
    # a network ignoring theta has constant log r, so predicted score = 0;
    # zero stored scores then contribute nothing for any alpha
    spec = ratio_spec(hidden=(6,))
    batch = ratio_toy()
    batch["score"] = np.zeros_like(batch["score"])
    w = init_weights(spec, 8)
    # kill the theta column weights so the tangents vanish
    from goldmine.netcore import unpack_layers
    W0, _ = unpack_layers(spec, w)[0]
    W0[:, 1] = 0.0
    l_base, _, _ = ratio_loss(spec, w, {k: v for k, v in batch.items()
                                        if k != "score"}, 0.0)
    l_pen, _, _ = ratio_loss(spec, w, batch, 10.0)
    assert l_pen == pytest.approx(l_base, abs=1e-14)


def test_ratio_clamp_counts_saturations():
    spec = ratio_spec(hidden=(4,))
    batch = ratio_toy()
    w = init_weights(spec, 9)
    w[-1] = 2 * LOG_RATIO_CLAMP  # push the output bias past the clamp
    loss, grad, aux = ratio_loss(spec, w, batch, 0.0)
    assert aux["saturated"] == batch["inp"].shape[0]
    assert np.isfinite(loss)
    # saturated rows contribute no head gradient; only the bias-driven
    # constant shift remains, so the gradient w.r.t. the head bias is 0
    assert grad[-1] == 0.0


def test_non_finite_loss_raises():
    spec = ratio_spec(hidden=(4,))
    batch = ratio_toy()
    w = init_weights(spec, 10)
    w[:] = np.nan
    with np.errstate(invalid="ignore"):
        with pytest.raises(NonFiniteLoss):
            classifier_loss(spec, w, classifier_toy(), 0.0)
        with pytest.raises(NonFiniteLoss):
            ratio_loss(spec, w, batch, 0.0)
