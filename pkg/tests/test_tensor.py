"""Core tensor ops: values against closed forms, gradients against the tape."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from floordesc.neural import (
    DTYPE,
    Tensor,
    concat,
    cross_entropy,
    matmul,
    maximum,
    relu,
    row,
    sigmoid,
    slice_,
    softmax,
    softmax_cross_entropy,
    stack,
    tanh,
    tsum,
)


def test_float32_default():
    t = Tensor([1.0, 2.0])
    assert t.data.dtype == np.float32


def test_float64_preserved():
    t = Tensor(np.zeros(3, dtype=np.float64))
    assert t.data.dtype == np.float64


def test_softmax_overflow_guard():
    out = softmax(Tensor([1000.0, 0.0]))
    assert np.all(np.isfinite(out.data))
    assert out.data[0] == pytest.approx(1.0)
    assert out.data[1] == pytest.approx(0.0, abs=1e-6)


def test_softmax_sums_to_one():
    rng = np.random.default_rng(0)
    for _ in range(20):
        v = rng.normal(size=7).astype(np.float32)
        out = softmax(Tensor(v))
        assert float(out.data.sum()) == pytest.approx(1.0, abs=1e-6)


def test_softmax_mpmath_oracle():
    # high-precision evaluation of the same definition
    mp = pytest.importorskip("mpmath")
    v = [1000.0, 0.0, -3.5]
    exps = [mp.e ** mp.mpf(x) for x in v]
    total = sum(exps)
    expect = [float(e / total) for e in exps]
    got = softmax(Tensor(v)).data
    assert np.allclose(got, expect, atol=1e-6)


def test_softmax_empty_vector_error():
    with pytest.raises(ValueError):
        softmax(Tensor(np.zeros(0, dtype=np.float32)))


def test_cross_entropy_uniform():
    probs = Tensor([0.25, 0.25, 0.25, 0.25])
    loss = cross_entropy(probs, 2)
    assert loss.item() == pytest.approx(np.log(4.0), abs=1e-6)


def test_cross_entropy_clamp():
    probs = Tensor([1.0, 0.0])
    loss = cross_entropy(probs, 1)
    assert loss.item() == pytest.approx(np.log(1e12), rel=1e-5)
    assert np.isfinite(loss.item())


def test_cross_entropy_target_out_of_range():
    with pytest.raises(ValueError):
        cross_entropy(Tensor([0.5, 0.5]), 2)


def test_cross_entropy_not_a_distribution():
    with pytest.raises(ValueError):
        cross_entropy(Tensor([0.9, 0.9]), 0)


def test_fused_equals_softmax_then_ce():
    rng = np.random.default_rng(3)
    logits = rng.normal(size=9).astype(np.float32)
    fused = softmax_cross_entropy(Tensor(logits), 4).item()
    chained = cross_entropy(softmax(Tensor(logits)), 4).item()
    assert fused == pytest.approx(chained, abs=1e-5)


def test_matmul_shapes():
    A = Tensor(np.arange(6, dtype=np.float32).reshape(2, 3))
    x = Tensor([1.0, 0.0, -1.0])
    assert matmul(A, x).shape == (2,)
    assert matmul(x, Tensor(np.ones((3, 4), dtype=np.float32))).shape == (4,)
    assert matmul(A, Tensor(np.ones((3, 2), dtype=np.float32))).shape == (2, 2)
    assert matmul(x, x).shape == ()


def test_matmul_mismatch_message():
    with pytest.raises(ValueError, match="shape mismatch"):
        matmul(Tensor(np.ones((2, 3), dtype=np.float32)), Tensor(np.ones(4, dtype=np.float32)))


def _numeric_grad(f, x, h=1e-4):
    x = x.astype(np.float64)
    g = np.zeros_like(x)
    flat = x.ravel()
    gf = g.ravel()
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + h
        fp = f(x)
        flat[i] = keep - h
        fm = f(x)
        flat[i] = keep
        gf[i] = (fp - fm) / (2 * h)
    return g


@pytest.mark.parametrize(
    "name,build",
    [
        ("tanh", lambda t: tsum(tanh(t))),
        ("sigmoid", lambda t: tsum(sigmoid(t))),
        ("relu", lambda t: tsum(relu(t))),
        ("softmax", lambda t: tsum(softmax(t) * Tensor([0.3, -1.0, 2.0, 0.1, 0.5]))),
        ("slice", lambda t: tsum(slice_(t, 1, 4))),
        ("fused_ce", lambda t: softmax_cross_entropy(t, 2)),
    ],
)
def test_elementwise_gradients(name, build):
    rng = np.random.default_rng(11)
    x = rng.normal(size=5)
    t = Tensor(x.copy(), requires_grad=True)
    out = build(t)
    out.backward()

    def f(arr):
        return float(build(Tensor(arr)).data)

    numeric = _numeric_grad(f, x)
    assert np.allclose(t.grad, numeric, atol=1e-6), name


def test_matmul_gradients():
    rng = np.random.default_rng(5)
    A = rng.normal(size=(3, 4))
    x = rng.normal(size=4)
    w = rng.normal(size=3)

    At = Tensor(A.copy(), requires_grad=True)
    xt = Tensor(x.copy(), requires_grad=True)
    out = tsum(matmul(At, xt) * Tensor(w))
    out.backward()
    assert np.allclose(At.grad, np.outer(w, x), atol=1e-6)
    assert np.allclose(xt.grad, A.T @ w, atol=1e-6)


def test_maximum_routes_gradient_to_argmax():
    a = Tensor(np.array([1.0, 5.0], dtype=np.float32), requires_grad=True)
    b = Tensor(np.array([2.0, 3.0], dtype=np.float32), requires_grad=True)
    out = tsum(maximum(a, b))
    out.backward()
    assert np.allclose(a.grad, [0.0, 1.0])
    assert np.allclose(b.grad, [1.0, 0.0])


def test_maximum_tie_prefers_first():
    a = Tensor(np.array([2.0], dtype=np.float32), requires_grad=True)
    b = Tensor(np.array([2.0], dtype=np.float32), requires_grad=True)
    tsum(maximum(a, b)).backward()
    assert a.grad[0] == 1.0
    assert b.grad[0] == 0.0


def test_concat_stack_row_gradients():
    a = Tensor(np.array([1.0, 2.0], dtype=np.float32), requires_grad=True)
    b = Tensor(np.array([3.0], dtype=np.float32), requires_grad=True)
    out = tsum(concat([a, b]) * Tensor([1.0, 10.0, 100.0]))
    out.backward()
    assert np.allclose(a.grad, [1.0, 10.0])
    assert np.allclose(b.grad, [100.0])

    table = Tensor(np.zeros((4, 3), dtype=np.float32), requires_grad=True)
    tsum(row(table, 2) * Tensor([1.0, 2.0, 3.0])).backward()
    expect = np.zeros((4, 3))
    expect[2] = [1.0, 2.0, 3.0]
    assert np.allclose(table.grad, expect)

    r0 = Tensor(np.array([1.0, 1.0], dtype=np.float32), requires_grad=True)
    r1 = Tensor(np.array([2.0, 2.0], dtype=np.float32), requires_grad=True)
    m = stack([r0, r1])
    tsum(matmul(m, Tensor([1.0, -1.0]))).backward()
    assert np.allclose(r0.grad, [1.0, -1.0])
    assert np.allclose(r1.grad, [1.0, -1.0])


def test_reused_node_accumulates():
    x = Tensor(np.array([2.0], dtype=np.float32), requires_grad=True)
    y = x * x
    tsum(y).backward()
    assert x.grad[0] == pytest.approx(4.0)


@given(st.lists(st.floats(-50, 50), min_size=1, max_size=12))
@settings(max_examples=200, deadline=None)
def test_softmax_always_a_distribution(values):
    out = softmax(Tensor(np.array(values, dtype=np.float32)))
    assert np.all(out.data >= 0)
    assert float(out.data.sum()) == pytest.approx(1.0, abs=1e-5)
