"""Gradient and forward-value checks for the tape.

Forward values are checked against scalar-loop oracles; gradients against
central finite differences.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from depgraph.autodiff import (ACTIVATIONS, Parameter, Tape, forward_affine,
                               forward_biaffine)

RNG = np.random.default_rng


def finite_diff(param: Parameter, f, step=1e-5) -> np.ndarray:
    """Central finite differences of scalar f() w.r.t. every param entry."""
    grad = np.zeros_like(param.values)
    flat = param.values.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        hi = f()
        flat[i] = orig - step
        lo = f()
        flat[i] = orig
        gflat[i] = (hi - lo) / (2 * step)
    return grad


def assert_grad_matches(params, build_loss, tol=1e-6):
    tape = Tape()
    loss = build_loss(tape)
    tape.backward(loss)
    for p in params:
        fd = finite_diff(p, lambda: build_loss(Tape()).value)
        denom = np.maximum(1.0, np.maximum(np.abs(fd), np.abs(p.gradient)))
        rel = np.abs(p.gradient - fd) / denom
        assert rel.max() < tol, f"{p.name}: max rel err {rel.max():.3g}"


def test_biaffine_hand_example():
    # x1 = [1, 2], x2 = [3, 1], U = [[1, 0], [0, 1]], W = [1, 1, 1, 1], b = 2
    # bilinear: x1.U.x2 = 1*3 + 2*1 = 5; linear: sum(x1)+sum(x2) = 7; plus b = 14
    tape = Tape()
    x1 = tape.const(np.array([1.0, 2.0]))
    x2 = tape.const(np.array([3.0, 1.0]))
    u = tape.const(np.eye(2).reshape(2, 1, 2))
    w = tape.const(np.ones((1, 4)))
    b = tape.const(np.array([2.0]))
    out = forward_biaffine(tape, x1, x2, u, w, b)
    assert out.value == pytest.approx(np.array([14.0]))


def test_biaffine_all_pairs_scalar_oracle():
    rng = RNG(0)
    m, n, a, k = 4, 3, 5, 2
    hh = rng.normal(size=(m, a))
    hd = rng.normal(size=(n, a))
    u = rng.normal(size=(a, k, a))
    w = rng.normal(size=(k, 2 * a))
    b = rng.normal(size=k)
    tape = Tape()
    out = tape.biaffine_all_pairs(tape.const(hh), tape.const(hd),
                                  tape.const(u), tape.const(w), tape.const(b))
    expect = np.zeros((m, n, k))
    for i in range(m):
        for j in range(n):
            for c in range(k):
                expect[i, j, c] = (hh[i] @ u[:, c, :] @ hd[j]
                                   + w[c] @ np.concatenate([hh[i], hd[j]])
                                   + b[c])
    np.testing.assert_allclose(out.value, expect, rtol=1e-12)


def test_biaffine_all_pairs_gradient():
    rng = RNG(1)
    m, n, a, k = 3, 2, 4, 3
    params = [Parameter(rng.normal(size=(m, a)), "hh"),
              Parameter(rng.normal(size=(n, a)), "hd"),
              Parameter(rng.normal(size=(a, k, a)), "u"),
              Parameter(rng.normal(size=(k, 2 * a)), "w"),
              Parameter(rng.normal(size=k), "b")]
    weights = rng.normal(size=(m, n, k))

    def build(tape):
        nodes = [tape.param(p) for p in params]
        out = tape.biaffine_all_pairs(*nodes)
        return tape.sum(tape.mul_const(out, weights))

    assert_grad_matches(params, build)


def test_affine_matches_numpy():
    rng = RNG(2)
    x = rng.normal(size=(5, 3))
    w = rng.normal(size=(4, 3))
    b = rng.normal(size=4)
    tape = Tape()
    out = tape.affine(tape.const(x), tape.const(w), tape.const(b))
    np.testing.assert_allclose(out.value, x @ w.T + b, rtol=1e-12)


@pytest.mark.parametrize("kind", sorted(ACTIVATIONS))
def test_activation_gradient(kind):
    rng = RNG(3)
    p = Parameter(rng.normal(size=(4, 3)) + 0.05, "x")  # nudge off relu kink

    def build(tape):
        out = tape.activation(tape.param(p), kind)
        return tape.sum(tape.mul(out, out))

    assert_grad_matches([p], build)


def test_gelu_values():
    # GELU(0) = 0; GELU(x) -> x for large x; GELU(-x) small
    act = ACTIVATIONS["gelu"][0]
    assert act(np.array([0.0]))[0] == 0.0
    assert act(np.array([10.0]))[0] == pytest.approx(10.0, abs=1e-8)
    assert abs(act(np.array([-10.0]))[0]) < 1e-8
    assert act(np.array([1.0]))[0] == pytest.approx(0.8413447460685429, rel=1e-12)


def test_softmax_cross_entropy_oracle():
    rng = RNG(4)
    logits = rng.normal(size=(3, 5))
    targets = np.array([1, 0, 4])
    tape = Tape()
    loss = tape.softmax_cross_entropy(tape.const(logits), targets)
    expect = 0.0
    for i, t in enumerate(targets):
        z = logits[i] - logits[i].max()
        expect += -(z[t] - np.log(np.exp(z).sum()))
    expect /= len(targets)
    assert loss.value == pytest.approx(expect, rel=1e-12)


def test_softmax_cross_entropy_mask_excludes():
    logits = np.array([[0.0, 100.0, 0.0]])
    mask = np.array([[True, False, True]])
    tape = Tape()
    loss = tape.softmax_cross_entropy(tape.const(logits), np.array([0]), mask)
    # with column 1 masked the distribution over {0, 2} is uniform
    assert loss.value == pytest.approx(np.log(2.0), rel=1e-12)


def test_sigmoid_cross_entropy_oracle():
    rng = RNG(5)
    logits = rng.normal(size=(4, 3))
    targets = (rng.random(size=(4, 3)) > 0.5).astype(float)
    mask = rng.random(size=(4, 3)) > 0.3
    mask[0, 0] = True
    tape = Tape()
    loss = tape.sigmoid_cross_entropy(tape.const(logits), targets, mask)
    p = 1.0 / (1.0 + np.exp(-logits))
    ce = -(targets * np.log(p) + (1 - targets) * np.log(1 - p))
    assert loss.value == pytest.approx(ce[mask].mean(), rel=1e-9)


def test_cross_entropy_gradients():
    rng = RNG(6)
    p = Parameter(rng.normal(size=(3, 4)), "logits")
    targets = np.array([2, 0, 3])
    mask = np.ones((3, 4), dtype=bool)
    mask[0, 1] = False

    def build(tape):
        return tape.softmax_cross_entropy(tape.param(p), targets, mask)

    assert_grad_matches([p], build)

    q = Parameter(rng.normal(size=(3, 4)), "logits2")
    bt = (rng.random(size=(3, 4)) > 0.5).astype(float)

    def build2(tape):
        return tape.sigmoid_cross_entropy(tape.param(q), bt, mask)

    assert_grad_matches([q], build2)


def test_scalar_mix_convexity_and_gradient():
    rng = RNG(7)
    layers = rng.normal(size=(3, 4, 5))
    logits = Parameter(np.zeros(3), "mix")
    tape = Tape()
    out = tape.scalar_mix(layers, tape.param(logits))
    np.testing.assert_allclose(out.value, layers.mean(axis=0), rtol=1e-12)

    logits.values[:] = rng.normal(size=3)

    def build(tape):
        out = tape.scalar_mix(layers, tape.param(logits))
        return tape.sum(tape.mul(out, out))

    assert_grad_matches([logits], build)


def test_scalar_mix_respects_active_mask():
    rng = RNG(8)
    layers = rng.normal(size=(3, 2, 4))
    logits = Parameter(rng.normal(size=3), "mix")
    active = np.array([True, False, True])
    tape = Tape()
    out = tape.scalar_mix(layers, tape.param(logits), active)
    w = np.exp(logits.values[[0, 2]])
    w /= w.sum()
    np.testing.assert_allclose(out.value, w[0] * layers[0] + w[1] * layers[2],
                               rtol=1e-12)


def test_rows_scatter_add_gradient():
    rng = RNG(9)
    table = Parameter(rng.normal(size=(6, 3)), "table")
    idx = np.array([0, 2, 2, 5])  # repeated index must accumulate

    def build(tape):
        picked = tape.rows(tape.param(table), idx)
        return tape.sum(tape.mul(picked, picked))

    assert_grad_matches([table], build)


def test_replace_rows_gradient():
    rng = RNG(10)
    x = Parameter(rng.normal(size=(4, 3)), "x")
    v = Parameter(rng.normal(size=3), "v")
    mask = np.array([True, False, True, False])

    def build(tape):
        out = tape.replace_rows(tape.param(x), mask, tape.param(v))
        return tape.sum(tape.mul(out, out))

    assert_grad_matches([x, v], build)
    # masked rows of x receive no gradient
    tape = Tape()
    tape.backward(build(tape))
    assert np.all(x.gradient[mask] == 0.0)


def test_backward_seed_scales_gradient():
    p = Parameter(np.array([3.0]), "p")
    tape = Tape()
    loss = tape.sum(tape.mul(tape.param(p), tape.param(p)))
    tape.backward(loss, seed=0.5)
    assert p.gradient[0] == pytest.approx(3.0)  # 2 * 3 * 0.5


def test_backward_rejects_nonfinite_loss():
    p = Parameter(np.array([0.0]), "p")
    tape = Tape()
    bad = tape.add_const(tape.param(p), np.array([np.inf]))
    with pytest.raises(FloatingPointError):
        tape.backward(tape.sum(bad))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 5), st.integers(2, 6))
def test_composite_network_gradient_property(seed, n, d):
    rng = RNG(seed)
    params = [Parameter(rng.normal(size=(n, d)), "x"),
              Parameter(rng.normal(size=(d, d)), "w"),
              Parameter(rng.normal(size=d), "b")]
    targets = rng.integers(0, d, size=n)

    def build(tape):
        x, w, b = (tape.param(p) for p in params)
        h = tape.activation(tape.affine(x, w, b), "gelu")
        h = tape.add(h, x)
        return tape.softmax_cross_entropy(h, targets)

    assert_grad_matches(params, build, tol=1e-5)


def test_forward_affine_1d():
    tape = Tape()
    x = tape.const(np.array([1.0, 2.0]))
    w = tape.const(np.array([[1.0, 1.0], [2.0, 0.0]]))
    b = tape.const(np.array([0.5, -0.5]))
    out = forward_affine(tape, x, w, b, activation="identity")
    np.testing.assert_allclose(out.value, [3.5, 1.5])
