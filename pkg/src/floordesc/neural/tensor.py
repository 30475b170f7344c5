"""Tape-based reverse-mode autodiff over numpy arrays.

Sized for small recurrent models: vectors and matrices, no batch axis,
float32 by default.  Every op records its inputs and a backward closure;
calling ``backward()`` on a scalar result walks the tape in reverse
topological order and accumulates gradients into ``Tensor.grad``.
"""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

DTYPE = np.float32

PROB_CLAMP = 1e-12


def _coerce(data) -> np.ndarray:
    # Existing float arrays and numpy float scalars keep their dtype
    # (grad_check runs models at float64); everything else becomes float32.
    if isinstance(data, (np.ndarray, np.generic)) and np.issubdtype(
        np.asarray(data).dtype, np.floating
    ):
        return np.asarray(data)
    return np.asarray(data, dtype=DTYPE)


def stable_sigmoid(z: np.ndarray) -> np.ndarray:
    """Logistic function without overflow for large |z|."""
    z = np.asarray(z)
    flat = np.atleast_1d(z)
    out = np.empty_like(flat)
    pos = flat >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-flat[pos]))
    ez = np.exp(flat[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out.reshape(z.shape)


def stable_softmax(z: np.ndarray) -> np.ndarray:
    """Softmax with max subtraction, for plain numpy vectors."""
    z = np.asarray(z)
    e = np.exp(z - z.max())
    return e / e.sum()


class Tensor:
    """A numpy array plus an optional gradient and a tape record."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, parents=(), backward=None):
        self.data = _coerce(data)
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self._parents = parents
        self._backward = backward

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self):
        self.grad = None

    def backward(self):
        """Accumulate gradients of this scalar into every reachable tensor."""
        if self.data.size != 1:
            raise ValueError(
                f"backward() needs a scalar, got shape {self.data.shape}"
            )
        topo: list[Tensor] = []
        seen: set[int] = set()
        work: list[tuple[Tensor, bool]] = [(self, False)]
        while work:
            node, emitted = work.pop()
            if emitted:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            work.append((node, True))
            for p in node._parents:
                work.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, _wrap(other))

    def __radd__(self, other):
        return add(_wrap(other), self)

    def __sub__(self, other):
        return add(self, mul(_wrap(other), constant(-1.0)))

    def __mul__(self, other):
        return mul(self, _wrap(other))

    def __rmul__(self, other):
        return mul(_wrap(other), self)

    def __matmul__(self, other):
        return matmul(self, _wrap(other))

    def __neg__(self):
        return mul(self, constant(-1.0))


def constant(value) -> Tensor:
    return Tensor(value, requires_grad=False)


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def uniform_init(rng: np.random.Generator, shape, fan_in: int) -> Tensor:
    """Trainable tensor drawn uniformly from +-1/sqrt(fan_in)."""
    bound = 1.0 / float(np.sqrt(fan_in))
    data = rng.uniform(-bound, bound, size=shape).astype(DTYPE)
    return Tensor(data, requires_grad=True)


def _accumulate(t: Tensor, g: np.ndarray):
    if not (t.requires_grad or t._parents):
        return
    if t.grad is None:
        t.grad = np.array(g, dtype=t.data.dtype, copy=True)
    else:
        t.grad = t.grad + g


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _make(data, parents, backward) -> Tensor:
    needs = any(p.requires_grad or p._parents for p in parents)
    if not needs:
        return Tensor(data)
    out = Tensor(data, parents=tuple(parents), backward=backward)
    return out


def add(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data + b.data

    def backward(g):
        _accumulate(a, _unbroadcast(g, a.data.shape))
        _accumulate(b, _unbroadcast(g, b.data.shape))

    return _make(out_data, (a, b), backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data * b.data

    def backward(g):
        _accumulate(a, _unbroadcast(g * b.data, a.data.shape))
        _accumulate(b, _unbroadcast(g * a.data, b.data.shape))

    return _make(out_data, (a, b), backward)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix/vector product covering the 2x2 grid of 1-D and 2-D operands."""
    an, bn = a.data.ndim, b.data.ndim
    if an not in (1, 2) or bn not in (1, 2):
        raise ValueError(f"matmul supports 1-D/2-D operands, got {an}-D and {bn}-D")
    try:
        out_data = a.data @ b.data
    except ValueError as exc:
        raise ValueError(
            f"matmul shape mismatch: {a.data.shape} @ {b.data.shape}"
        ) from exc

    def backward(g):
        if an == 2 and bn == 1:
            _accumulate(a, np.outer(g, b.data))
            _accumulate(b, a.data.T @ g)
        elif an == 1 and bn == 2:
            _accumulate(a, b.data @ g)
            _accumulate(b, np.outer(a.data, g))
        elif an == 2 and bn == 2:
            _accumulate(a, g @ b.data.T)
            _accumulate(b, a.data.T @ g)
        else:
            _accumulate(a, g * b.data)
            _accumulate(b, g * a.data)

    return _make(out_data, (a, b), backward)


def tanh(a: Tensor) -> Tensor:
    out_data = np.tanh(a.data)

    def backward(g):
        _accumulate(a, g * (1.0 - out_data * out_data))

    return _make(out_data, (a,), backward)


def sigmoid(a: Tensor) -> Tensor:
    out_data = stable_sigmoid(a.data)

    def backward(g):
        _accumulate(a, g * out_data * (1.0 - out_data))

    return _make(out_data, (a,), backward)


def relu(a: Tensor) -> Tensor:
    out_data = np.maximum(a.data, 0.0)

    def backward(g):
        _accumulate(a, g * (a.data > 0))

    return _make(out_data, (a,), backward)


def log(a: Tensor) -> Tensor:
    out_data = np.log(a.data)

    def backward(g):
        _accumulate(a, g / a.data)

    return _make(out_data, (a,), backward)


def maximum(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise max; on ties the gradient goes to the first argument."""
    out_data = np.maximum(a.data, b.data)

    def backward(g):
        take_a = a.data >= b.data
        _accumulate(a, _unbroadcast(g * take_a, a.data.shape))
        _accumulate(b, _unbroadcast(g * ~take_a, b.data.shape))

    return _make(out_data, (a, b), backward)


def tsum(a: Tensor) -> Tensor:
    out_data = a.data.sum()

    def backward(g):
        _accumulate(a, np.full_like(a.data, g))

    return _make(out_data, (a,), backward)


def concat(parts: Sequence[Tensor]) -> Tensor:
    parts = [_wrap(p) for p in parts]
    if not parts:
        raise ValueError("concat of an empty sequence")
    for p in parts:
        if p.data.ndim != 1:
            raise ValueError("concat expects 1-D tensors")
    out_data = np.concatenate([p.data for p in parts])
    offsets = np.cumsum([0] + [p.data.shape[0] for p in parts])

    def backward(g):
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            _accumulate(p, g[lo:hi])

    return _make(out_data, tuple(parts), backward)


def stack(rows: Sequence[Tensor]) -> Tensor:
    """Stack 1-D tensors of equal length into a matrix, one per row."""
    rows = [_wrap(r) for r in rows]
    if not rows:
        raise ValueError("stack of an empty sequence")
    out_data = np.stack([r.data for r in rows])

    def backward(g):
        for i, r in enumerate(rows):
            _accumulate(r, g[i])

    return _make(out_data, tuple(rows), backward)


def slice_(a: Tensor, lo: int, hi: int) -> Tensor:
    if a.data.ndim != 1:
        raise ValueError("slice_ expects a 1-D tensor")
    out_data = a.data[lo:hi]

    def backward(g):
        full = np.zeros_like(a.data)
        full[lo:hi] = g
        _accumulate(a, full)

    return _make(out_data, (a,), backward)


def row(a: Tensor, index: int) -> Tensor:
    """Select one row of a matrix; used for embedding lookups."""
    if a.data.ndim != 2:
        raise ValueError("row expects a 2-D tensor")
    if not 0 <= index < a.data.shape[0]:
        raise ValueError(f"row index {index} out of range for {a.data.shape}")
    out_data = a.data[index]

    def backward(g):
        full = np.zeros_like(a.data)
        full[index] = g
        _accumulate(a, full)

    return _make(out_data, (a,), backward)


def softmax(a: Tensor) -> Tensor:
    """Probability vector via exp with max subtraction; empty input is an error."""
    a = _wrap(a)
    if a.data.ndim != 1:
        raise ValueError("softmax expects a 1-D tensor")
    if a.data.size == 0:
        raise ValueError("softmax of an empty vector")
    out_data = stable_softmax(a.data)

    def backward(g):
        inner = np.dot(g, out_data)
        _accumulate(a, out_data * (g - inner))

    return _make(out_data, (a,), backward)


def cross_entropy(probs: Tensor, target: int) -> Tensor:
    """-log p[target] with the probability clamped at 1e-12.

    Expects ``probs`` to already be a distribution (sums to one within
    1e-5).  Training paths should prefer :func:`softmax_cross_entropy`,
    which fuses the softmax for a stabler gradient.
    """
    probs = _wrap(probs)
    if probs.data.ndim != 1:
        raise ValueError("cross_entropy expects a 1-D probability vector")
    if not 0 <= target < probs.data.shape[0]:
        raise ValueError(
            f"cross_entropy target {target} out of range for length {probs.data.shape[0]}"
        )
    total = float(probs.data.sum())
    if abs(total - 1.0) > 1e-5:
        raise ValueError(f"cross_entropy input sums to {total!r}, not 1")
    p = max(float(probs.data[target]), PROB_CLAMP)
    out_data = np.asarray(-np.log(p), dtype=probs.data.dtype)

    def backward(g):
        full = np.zeros_like(probs.data)
        if probs.data[target] > PROB_CLAMP:
            full[target] = -g / probs.data[target]
        _accumulate(probs, full)

    return _make(out_data, (probs,), backward)


def softmax_cross_entropy(logits: Tensor, target: int) -> Tensor:
    """Fused -log softmax(logits)[target]; gradient is probs - onehot."""
    logits = _wrap(logits)
    if logits.data.ndim != 1:
        raise ValueError("softmax_cross_entropy expects a 1-D logit vector")
    if not 0 <= target < logits.data.shape[0]:
        raise ValueError(
            f"softmax_cross_entropy target {target} out of range "
            f"for length {logits.data.shape[0]}"
        )
    z = logits.data
    m = z.max()
    log_z = m + np.log(np.exp(z - m).sum())
    out_data = np.asarray(log_z - z[target], dtype=z.dtype)

    def backward(g):
        grad = stable_softmax(z)
        grad[target] -= 1.0
        _accumulate(logits, g * grad)

    return _make(out_data, (logits,), backward)
