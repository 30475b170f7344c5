"""Central-difference gradient verification.

The closure is evaluated with parameters cast to float64 by default so
the difference quotient is not drowned by float32 rounding on composite
losses; pass cast=None to check at the training precision instead.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import Tensor
from .optim import zero_grads


@dataclass
class GradCheckReport:
    per_parameter: dict[str, float]
    tolerance: float

    @property
    def max_error(self) -> float:
        return max(self.per_parameter.values()) if self.per_parameter else 0.0

    @property
    def passed(self) -> bool:
        return self.max_error < self.tolerance

    def worst(self) -> str:
        if not self.per_parameter:
            return "(no parameters)"
        name = max(self.per_parameter, key=self.per_parameter.get)
        return f"{name}: {self.per_parameter[name]:.3e}"


def grad_check(
    closure,
    params: dict[str, Tensor],
    tolerance: float = 1e-3,
    step: float = 1e-2,
    cast=np.float64,
) -> GradCheckReport:
    """Compare tape gradients of closure() against central differences.

    closure must rebuild its graph on each call from the current values in
    ``params`` and return a scalar Tensor.  Relative error per entry is
    |a - n| / max(|a|, |n|, 1e-8); the report keeps the max per parameter.
    """
    originals = {name: p.data for name, p in params.items()}
    try:
        if cast is not None:
            for p in params.values():
                p.data = p.data.astype(cast)

        first = float(closure().data)
        second = float(closure().data)
        if first != second:
            raise ValueError(
                f"closure is not deterministic: {first!r} vs {second!r}"
            )

        zero_grads(params)
        loss = closure()
        loss.backward()
        analytic = {
            name: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data))
            for name, p in params.items()
        }

        per_param: dict[str, float] = {}
        for name, p in params.items():
            a_flat = analytic[name].ravel()
            data = p.data
            flat = data.ravel()
            worst = 0.0
            for i in range(flat.size):
                keep = flat[i]
                flat[i] = keep + step
                f_plus = float(closure().data)
                flat[i] = keep - step
                f_minus = float(closure().data)
                flat[i] = keep
                n = (f_plus - f_minus) / (2.0 * step)
                a = float(a_flat[i])
                err = abs(a - n) / max(abs(a), abs(n), 1e-8)
                if err > worst:
                    worst = err
            per_param[name] = worst
    finally:
        for name, p in params.items():
            p.data = originals[name]
        zero_grads(params)
    return GradCheckReport(per_parameter=per_param, tolerance=tolerance)
