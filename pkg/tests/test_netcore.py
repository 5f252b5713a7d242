"""Gradient engine: finite-difference suites for every derivative path."""

import numpy as np
import pytest

from goldmine.netcore import (AdamState, NetworkSpec, adam_step, backward,
                              forward, hvp, init_weights, log_density,
                              mixture_sample, theta_gradient)
from goldmine.netcore.checkpoint import load_checkpoint, save_checkpoint
from goldmine.exceptions import DataError

def _coords(rng, spec, want=30):
    return rng.choice(spec.n_weights, size=min(want, spec.n_weights), replace=False)


def scalar_spec():
    return NetworkSpec(input_dim=3, hidden=(5,), head="scalar", out_dim=1,
                       theta_dim=2, theta_start=1,
                       input_loc=(0.5, -0.2, 0.1), input_scale=(2.0, 0.7, 1.3))


def softmax_spec():
    return NetworkSpec(input_dim=1, hidden=(4,), head="softmax", out_dim=3,
                       theta_dim=1, theta_start=0,
                       input_loc=(-0.7,), input_scale=(0.2,))


def mixture_spec():
    return NetworkSpec(input_dim=2, hidden=(4,), head="gaussian_mixture",
                       out_dim=2, n_components=2, theta_dim=2, theta_start=0,
                       input_loc=(0.1, -0.3), input_scale=(0.5, 1.5),
                       target_loc=(1.0, -2.0), target_scale=(3.0, 0.8))


def random_setup(spec, n=6, seed=0):
    rng = np.random.default_rng(seed)
    w = init_weights(spec, seed) + 0.05 * rng.standard_normal(spec.n_weights)
    inp = rng.standard_normal((n, spec.input_dim))
    return w, inp


def fd_weight_grad(f, w, coords, h=1e-6):
    g = {}
    for j in coords:
        wp, wm = w.copy(), w.copy()
        wp[j] += h
        wm[j] -= h
        g[j] = (f(wp) - f(wm)) / (2 * h)
    return g


@pytest.mark.parametrize("make_spec", [scalar_spec, softmax_spec, mixture_spec])
def test_weight_gradient_matches_fd(make_spec):
    spec = make_spec()
    w, inp = random_setup(spec)
    rng = np.random.default_rng(100)
    c = rng.standard_normal((inp.shape[0], spec.head_width))

    def f(wv):
        return float(np.sum(c * forward(spec, wv, inp).v))

    cache = forward(spec, w, inp)
    grad = backward(spec, w, cache, c)
    for j, fd in fd_weight_grad(f, w, _coords(rng, spec)).items():
        assert grad[j] == pytest.approx(fd, rel=1e-5, abs=1e-7)


@pytest.mark.parametrize("make_spec", [scalar_spec, softmax_spec, mixture_spec])
def test_theta_tangents_match_fd(make_spec):
    spec = make_spec()
    w, inp = random_setup(spec, seed=1)
    cache = forward(spec, w, inp, tangents=True)
    h = 1e-6
    for k in range(spec.theta_dim):
        ip, im = inp.copy(), inp.copy()
        ip[:, spec.theta_start + k] += h
        im[:, spec.theta_start + k] -= h
        fd = (forward(spec, w, ip).v - forward(spec, w, im).v) / (2 * h)
        assert np.allclose(cache.vdot[k], fd, rtol=1e-5, atol=1e-8)


@pytest.mark.parametrize("make_spec", [scalar_spec, softmax_spec, mixture_spec])
def test_reverse_over_forward_matches_fd(make_spec):
    # gradient of a function of the theta tangents (the penalty path)
    spec = make_spec()
    w, inp = random_setup(spec, seed=2)
    n = inp.shape[0]
    rng = np.random.default_rng(200)
    cv = rng.standard_normal((n, spec.head_width))
    cd = rng.standard_normal((spec.theta_dim, n, spec.head_width))

    def f(wv):
        cache = forward(spec, wv, inp, tangents=True)
        return float(np.sum(cv * cache.v) + np.sum(cd * cache.vdot))

    cache = forward(spec, w, inp, tangents=True)
    grad = backward(spec, w, cache, cv, cd)
    for j, fd in fd_weight_grad(f, w, _coords(rng, spec)).items():
        assert grad[j] == pytest.approx(fd, rel=1e-4, abs=1e-6)


def _density_target(spec, n, seed=3):
    rng = np.random.default_rng(seed)
    if spec.head == "softmax":
        return rng.integers(0, spec.out_dim, size=n)
    return rng.standard_normal((n, spec.out_dim)) * spec.target_scale + spec.target_loc


@pytest.mark.parametrize("make_spec", [softmax_spec, mixture_spec])
def test_log_density_gradient_matches_fd(make_spec):
    spec = make_spec()
    w, inp = random_setup(spec, seed=4)
    v = forward(spec, w, inp).v
    target = _density_target(spec, inp.shape[0])
    _, G = log_density(spec, v, target)
    h = 1e-6
    for j in range(spec.head_width):
        vp, vm = v.copy(), v.copy()
        vp[:, j] += h
        vm[:, j] -= h
        fd = (log_density(spec, vp, target)[0] - log_density(spec, vm, target)[0]) / (2 * h)
        assert np.allclose(G[:, j], fd, rtol=1e-5, atol=1e-8)


@pytest.mark.parametrize("make_spec", [softmax_spec, mixture_spec])
def test_hvp_matches_fd_of_gradient(make_spec):
    spec = make_spec()
    w, inp = random_setup(spec, seed=5)
    v = forward(spec, w, inp).v
    target = _density_target(spec, inp.shape[0])
    u = np.random.default_rng(6).standard_normal(v.shape)
    h = 1e-6
    fd = (log_density(spec, v + h * u, target)[1]
          - log_density(spec, v - h * u, target)[1]) / (2 * h)
    assert np.allclose(hvp(spec, v, target, u), fd, rtol=1e-4, atol=1e-6)


def test_softmax_density_normalizes():
    spec = softmax_spec()
    w, inp = random_setup(spec, seed=7)
    v = forward(spec, w, inp).v
    lp = np.column_stack([log_density(spec, v, np.full(inp.shape[0], b))[0]
                          for b in range(spec.out_dim)])
    assert np.allclose(np.exp(lp).sum(axis=1), 1.0, atol=1e-12)


def test_theta_gradient_matches_fd_for_density_head():
    spec = mixture_spec()
    w, inp = random_setup(spec, seed=8)
    target = _density_target(spec, inp.shape[0])
    got = theta_gradient(spec, w, inp, target=target)
    h = 1e-6
    for k in range(spec.theta_dim):
        ip, im = inp.copy(), inp.copy()
        ip[:, k] += h
        im[:, k] -= h
        lp = log_density(spec, forward(spec, w, ip).v, target)[0]
        lm = log_density(spec, forward(spec, w, im).v, target)[0]
        assert np.allclose(got[:, k], (lp - lm) / (2 * h), rtol=1e-5, atol=1e-8)


def test_theta_gradient_sign_flip():
    spec = scalar_spec()
    w, inp = random_setup(spec, seed=9)
    plus = theta_gradient(spec, w, inp, sign=1.0)
    minus = theta_gradient(spec, w, inp, sign=-1.0)
    assert np.array_equal(plus, -minus)


def test_adam_first_steps():
    w = np.array([1.0, -2.0])
    g = np.array([0.5, -0.25])
    st = AdamState.zeros(2)
    w1 = adam_step(st, w, g, lr=0.1)
    # after bias correction the first step is lr * sign(g) (up to eps)
    expect = w - 0.1 * g / (np.abs(g) + 1e-8)
    assert np.allclose(w1, expect, atol=1e-8)
    assert st.t == 1
    w2 = adam_step(st, w1, g, lr=0.1)
    mhat = (0.9 * 0.1 * g + 0.1 * g) / (1 - 0.9**2)
    vhat = (0.999 * 0.001 * g**2 + 0.001 * g**2) / (1 - 0.999**2)
    assert np.allclose(w2, w1 - 0.1 * mhat / (np.sqrt(vhat) + 1e-8), atol=1e-12)


def test_init_weights_determinism_and_zero_biases():
    spec = scalar_spec()
    a = init_weights(spec, [3, 0])
    b = init_weights(spec, [3, 0])
    c = init_weights(spec, [4, 0])
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    from goldmine.netcore import unpack_layers
    for _, bias in unpack_layers(spec, a):
        assert np.all(bias == 0.0)


def test_spec_validation():
    with pytest.raises(ValueError):
        NetworkSpec(input_dim=2, head="softmax", out_dim=1)
    with pytest.raises(ValueError):
        NetworkSpec(input_dim=2, head="gaussian_mixture", out_dim=1)
    with pytest.raises(ValueError):
        NetworkSpec(input_dim=2, theta_dim=2, theta_start=1)
    with pytest.raises(ValueError):
        NetworkSpec(input_dim=2, input_scale=(1.0, 0.0))
    with pytest.raises(ValueError):
        NetworkSpec(input_dim=2, head="wavelet")


def test_forward_shape_checks():
    spec = scalar_spec()
    w = init_weights(spec, 0)
    with pytest.raises(ValueError):
        forward(spec, w, np.zeros((4, 2)))
    no_theta = NetworkSpec(input_dim=2)
    with pytest.raises(ValueError):
        forward(no_theta, init_weights(no_theta, 0), np.zeros((2, 2)), tangents=True)


def test_checkpoint_round_trip(tmp_path):
    spec = mixture_spec()
    w, inp = random_setup(spec, seed=10)
    opt = AdamState(m=np.array([0.1, -0.2]), v=np.array([0.3, 0.4]), t=7)
    path = tmp_path / "net.ckpt"
    save_checkpoint(path, spec, w, optimizer=opt, meta={"note": "probe"})
    doc = load_checkpoint(path)
    assert doc["spec"] == spec
    assert np.array_equal(doc["weights"], w)
    assert doc["optimizer"].t == 7
    assert np.array_equal(doc["optimizer"].m, opt.m)
    assert doc["meta"]["note"] == "probe"
    # predictions from the reloaded weights are bit-identical
    assert np.array_equal(forward(spec, doc["weights"], inp).v,
                          forward(spec, w, inp).v)
    # re-saving reproduces the file byte for byte
    path2 = tmp_path / "net2.ckpt"
    save_checkpoint(path2, doc["spec"], doc["weights"], optimizer=doc["optimizer"],
                    meta=doc["meta"])
    assert path.read_bytes() == path2.read_bytes()


def test_checkpoint_rejects_garbage(tmp_path):
    p = tmp_path / "bad.ckpt"
    p.write_text("not json{")
    with pytest.raises(DataError):
        load_checkpoint(p)
    p.write_text('{"format": "something-else"}\n')
    with pytest.raises(DataError):
        load_checkpoint(p)


def test_mixture_sample_deterministic_and_shaped():
    spec = mixture_spec()
    w, inp = random_setup(spec, seed=11)
    v = forward(spec, w, inp).v
    a = mixture_sample(spec, v, seed=5)
    b = mixture_sample(spec, v, seed=5)
    assert a.shape == (inp.shape[0], spec.out_dim)
    assert np.array_equal(a, b)
    assert np.all(np.isfinite(a))
