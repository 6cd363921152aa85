"""Central finite-difference verification of tape gradients."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from ..errors import DomainError, NondeterministicLossError
from .tensor import Tensor, gradients, no_grad


def check_gradients(
    loss_fn: Callable[[], Tensor],
    params: Sequence[Tensor],
    eps: float = 1e-5,
    floor: float = 1e-6,
) -> float:
    """Worst relative error between tape gradients and central differences.

    ``loss_fn`` takes no arguments and reads the current values of ``params``;
    each coordinate is perturbed in place by ``±eps`` and restored. The
    relative error of a coordinate is ``|a - n| / max(|a|, |n|, floor)``, so
    gradients below ``floor`` are compared absolutely.
    """
    if eps <= 0:
        raise DomainError("eps must be positive")
    params = list(params)
    loss = loss_fn()
    analytic = [g.copy() for g in gradients(loss, params)]
    with no_grad():
        base = loss_fn().item()
        again = loss_fn().item()
    if base != again or base != loss.item():
        raise NondeterministicLossError(f"loss evaluations differ: {base!r} vs {again!r}")

    worst = 0.0
    with no_grad():
        for p, grad in zip(params, analytic):
            for idx in np.ndindex(p.shape):
                original = p.data[idx]
                p.data[idx] = original + eps
                upper = loss_fn().item()
                p.data[idx] = original - eps
                lower = loss_fn().item()
                p.data[idx] = original
                numeric = (upper - lower) / (2.0 * eps)
                a = grad[idx]
                err = abs(a - numeric) / max(abs(a), abs(numeric), floor)
                worst = max(worst, err)
    return worst
