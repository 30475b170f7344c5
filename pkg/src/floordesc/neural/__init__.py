from .tensor import (
    DTYPE,
    Tensor,
    add,
    concat,
    constant,
    cross_entropy,
    log,
    matmul,
    maximum,
    mul,
    relu,
    row,
    sigmoid,
    slice_,
    softmax,
    softmax_cross_entropy,
    stable_sigmoid,
    stable_softmax,
    stack,
    tanh,
    tsum,
    uniform_init,
)
from .rnn import LstmParams, bilstm_encode, lstm_run, lstm_step, zero_state
from .optim import OptimizerState, adam_step, clip_global_norm, zero_grads
from .gradcheck import GradCheckReport, grad_check
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "DTYPE",
    "Tensor",
    "add",
    "concat",
    "constant",
    "cross_entropy",
    "log",
    "matmul",
    "maximum",
    "mul",
    "relu",
    "row",
    "sigmoid",
    "slice_",
    "softmax",
    "softmax_cross_entropy",
    "stable_sigmoid",
    "stable_softmax",
    "stack",
    "tanh",
    "tsum",
    "uniform_init",
    "LstmParams",
    "bilstm_encode",
    "lstm_run",
    "lstm_step",
    "zero_state",
    "OptimizerState",
    "adam_step",
    "clip_global_norm",
    "zero_grads",
    "GradCheckReport",
    "grad_check",
    "load_checkpoint",
    "save_checkpoint",
]
