"""LSTM cell and sequence encoders built on the tape.

Gate layout inside the stacked 4h parameter block is i, f, g, o
(input, forget, candidate, output); the candidate uses tanh, the
rest use the logistic function.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .tensor import (
    Tensor,
    add,
    concat,
    matmul,
    mul,
    sigmoid,
    slice_,
    tanh,
    uniform_init,
)


@dataclass
class LstmParams:
    """Weights of one LSTM layer: W (4h x in), U (4h x h), b (4h)."""

    input_dim: int
    hidden_dim: int
    W: Tensor
    U: Tensor
    b: Tensor

    @classmethod
    def init(cls, rng: np.random.Generator, input_dim: int, hidden_dim: int) -> "LstmParams":
        if input_dim <= 0 or hidden_dim <= 0:
            raise ValueError("lstm dims must be positive")
        W = uniform_init(rng, (4 * hidden_dim, input_dim), input_dim)
        U = uniform_init(rng, (4 * hidden_dim, hidden_dim), hidden_dim)
        b = Tensor(np.zeros(4 * hidden_dim, dtype=W.data.dtype), requires_grad=True)
        return cls(input_dim, hidden_dim, W, U, b)

    def named_parameters(self, prefix: str = "") -> dict[str, Tensor]:
        return {prefix + "W": self.W, prefix + "U": self.U, prefix + "b": self.b}


def _check_vec(name: str, t: Tensor, dim: int):
    if t.data.ndim != 1 or t.data.shape[0] != dim:
        raise ValueError(
            f"lstm_step: {name} has shape {t.data.shape}, expected ({dim},)"
        )


def lstm_step(params: LstmParams, x: Tensor, h_prev: Tensor, c_prev: Tensor):
    """One cell update; returns (h, c)."""
    _check_vec("x", x, params.input_dim)
    _check_vec("h_prev", h_prev, params.hidden_dim)
    _check_vec("c_prev", c_prev, params.hidden_dim)
    h = params.hidden_dim
    gates = add(add(matmul(params.W, x), matmul(params.U, h_prev)), params.b)
    i = sigmoid(slice_(gates, 0, h))
    f = sigmoid(slice_(gates, h, 2 * h))
    g = tanh(slice_(gates, 2 * h, 3 * h))
    o = sigmoid(slice_(gates, 3 * h, 4 * h))
    c = add(mul(f, c_prev), mul(i, g))
    h_new = mul(o, tanh(c))
    return h_new, c


def zero_state(params: LstmParams, dtype=None) -> tuple[Tensor, Tensor]:
    dtype = dtype or params.W.data.dtype
    z = np.zeros(params.hidden_dim, dtype=dtype)
    return Tensor(z.copy()), Tensor(z.copy())


def lstm_run(params: LstmParams, xs: Sequence[Tensor], h0=None, c0=None) -> list[Tensor]:
    """Run the cell over a sequence; returns the hidden state at each step."""
    if len(xs) == 0:
        raise ValueError("lstm_run over an empty sequence")
    if h0 is None or c0 is None:
        h, c = zero_state(params)
    else:
        h, c = h0, c0
    out = []
    for x in xs:
        h, c = lstm_step(params, x, h, c)
        out.append(h)
    return out


def bilstm_encode(fwd: LstmParams, bwd: LstmParams, xs: Sequence[Tensor]) -> list[Tensor]:
    """Bidirectional encoding: per step concat of forward and backward h."""
    if len(xs) == 0:
        raise ValueError("bilstm_encode over an empty sequence")
    if fwd.hidden_dim != bwd.hidden_dim:
        raise ValueError(
            f"bilstm_encode: forward hidden {fwd.hidden_dim} != backward {bwd.hidden_dim}"
        )
    forward = lstm_run(fwd, xs)
    backward = lstm_run(bwd, list(reversed(xs)))
    backward = list(reversed(backward))
    return [concat([hf, hb]) for hf, hb in zip(forward, backward)]
