"""Scalar log-sum-exp and inverted dropout."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from ..errors import DomainError, NonFiniteError
from .tensor import Tensor, mul


def logsumexp(values: Sequence[float]) -> float:
    """``log(sum(exp(v)))`` with the max subtracted first so large inputs do not overflow."""
    v = np.asarray(values, dtype=np.float64).reshape(-1)
    if v.size == 0:
        raise DomainError("logsumexp of an empty vector")
    if not np.all(np.isfinite(v)):
        raise NonFiniteError("logsumexp input contains NaN or infinity")
    peak = float(v.max())
    return peak + math.log(float(np.exp(v - peak).sum()))


def dropout(x, rate: float, training: bool, rng: np.random.Generator | None):
    """Inverted dropout. Returns ``x`` itself when inactive.

    Accepts a :class:`Tensor` (the mask becomes a constant on the tape) or a
    plain array.
    """
    if not 0.0 <= rate < 1.0:
        raise DomainError(f"dropout rate must lie in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    if rng is None:
        raise DomainError("dropout in training mode needs an rng")
    shape = x.shape
    keep = rng.random(shape) >= rate
    mask = keep * (1.0 / (1.0 - rate))
    if isinstance(x, Tensor):
        return mul(x, mask)
    return np.asarray(x, dtype=np.float64) * mask
