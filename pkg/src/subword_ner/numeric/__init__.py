"""Dense float64 tensors, a gradient tape, Adam, dropout and gradient checking."""

from .functional import dropout, logsumexp
from .gradcheck import check_gradients
from .optim import AdamState, adam_step
from .tensor import Tensor, as_tensor, gradients, no_grad, parameter

__all__ = [
    "AdamState",
    "Tensor",
    "adam_step",
    "as_tensor",
    "check_gradients",
    "dropout",
    "gradients",
    "logsumexp",
    "no_grad",
    "parameter",
]
