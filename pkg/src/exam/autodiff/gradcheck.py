"""Central finite-difference gradient checking (float64 mode)."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor


def numeric_gradient(fn: Callable[[], Tensor], param: Tensor,
                     eps: float = 1e-5) -> np.ndarray:
    """d fn() / d param by central differences, one element at a time.

    ``fn`` must rebuild its graph on every call and return a scalar Tensor.
    """
    flat = param.data.reshape(-1)
    grad = np.zeros_like(flat)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        up = fn().item()
        flat[i] = orig - eps
        down = fn().item()
        flat[i] = orig
        grad[i] = (up - down) / (2.0 * eps)
    return grad.reshape(param.data.shape)


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray,
                       floor: float = 1e-6) -> float:
    denom = np.maximum(np.abs(analytic) + np.abs(numeric), floor)
    return float(np.max(np.abs(analytic - numeric) / denom))


def check_gradients(fn: Callable[[], Tensor], params: Sequence[Tensor],
                    eps: float = 1e-5, rtol: float = 1e-4) -> float:
    """Run fn, backprop, and compare every parameter against central
    finite differences. Returns the worst relative error; raises
    AssertionError past rtol, naming the offending parameter.
    """
    for p in params:
        p.zero_grad()
    loss = fn()
    loss.backward()
    worst = 0.0
    for p in params:
        analytic = p.grad if p.grad is not None else np.zeros_like(p.data)
        numeric = numeric_gradient(fn, p, eps=eps)
        err = max_relative_error(analytic, numeric)
        worst = max(worst, err)
        if err > rtol:
            raise AssertionError(
                f"gradient check failed for {p.name or 'parameter'}: "
                f"relative error {err:.3e} > {rtol:.1e}"
            )
    return worst
