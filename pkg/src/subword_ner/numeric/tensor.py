"""Reverse-mode automatic differentiation over float64 numpy arrays.

Every operation on :class:`Tensor` values records its inputs and a closure
that maps the output gradient to input gradients. Calling
:meth:`Tensor.backward` on a scalar replays those closures in reverse
topological order. The recorded graph is the gradient tape; it lives on the
tensors themselves and is dropped with them.
"""

from __future__ import annotations

import contextlib
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import expit

_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Evaluate without recording a tape (inference, finite differences)."""
    global _grad_enabled
    previous = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = previous


class Tensor:
    """Dense float64 array with an optional gradient slot."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")
    __array_priority__ = 100

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], None] | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data.item())

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __getitem__(self, index):
        return getitem(self, index)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def sum(self, axis=None):
        return tensor_sum(self, axis)

    def backward(self, grad=None) -> None:
        """Accumulate d(self)/d(leaf) into ``.grad`` of every reachable leaf."""
        if grad is None:
            if self.size != 1:
                raise ValueError("backward() without a seed gradient needs a scalar")
            grad = np.ones_like(self.data)
        order = _topological_order(self)
        self.grad = np.array(grad, dtype=np.float64)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def parameter(data) -> Tensor:
    return Tensor(np.array(data, dtype=np.float64), requires_grad=True)


def _topological_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in seen:
                stack.append((parent, False))
    return order


def _record(data: np.ndarray, parents: tuple[Tensor, ...], backward) -> Tensor:
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward
    return out


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.array(g, dtype=np.float64)
    else:
        t.grad += g


def _accumulate_at(t: Tensor, index, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    np.add.at(t.grad, index, g)


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


# --- elementwise ------------------------------------------------------------


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        _accumulate(a, _unbroadcast(g, a.shape))
        _accumulate(b, _unbroadcast(g, b.shape))

    return _record(a.data + b.data, (a, b), backward)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        _accumulate(a, _unbroadcast(g, a.shape))
        _accumulate(b, _unbroadcast(-g, b.shape))

    return _record(a.data - b.data, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        if a.requires_grad:
            _accumulate(a, _unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(g * a.data, b.shape))

    return _record(a.data * b.data, (a, b), backward)


def sigmoid(x: Tensor) -> Tensor:
    y = expit(x.data)

    def backward(g):
        _accumulate(x, g * y * (1.0 - y))

    return _record(y, (x,), backward)


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)

    def backward(g):
        _accumulate(x, g * (1.0 - y * y))

    return _record(y, (x,), backward)


def where(condition: np.ndarray, a: Tensor, b: Tensor) -> Tensor:
    """Select ``a`` where ``condition`` holds, else ``b``. Exact, no arithmetic."""
    a, b = as_tensor(a), as_tensor(b)
    condition = np.asarray(condition, dtype=bool)

    def backward(g):
        zero = np.zeros_like(g)
        if a.requires_grad:
            _accumulate(a, _unbroadcast(np.where(condition, g, zero), a.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(np.where(condition, zero, g), b.shape))

    return _record(np.where(condition, a.data, b.data), (a, b), backward)


# --- linear algebra ---------------------------------------------------------

# BLAS picks kernels by matrix height, so the same row can round differently
# depending on how many rows share the call. Multiplying in zero-padded blocks
# of a fixed height makes every output row depend only on that row's input.
ROW_BLOCK = 16


def row_stable_matmul(x: np.ndarray, w_t: np.ndarray) -> np.ndarray:
    """``x @ w_t`` for 2-D ``x``, with each output row independent of the other rows."""
    n = x.shape[0]
    padded = -(-n // ROW_BLOCK) * ROW_BLOCK
    if padded != n:
        x = np.concatenate([x, np.zeros((padded - n, x.shape[1]))])
    out = np.empty((padded, w_t.shape[1]))
    for start in range(0, padded, ROW_BLOCK):
        np.matmul(x[start : start + ROW_BLOCK], w_t, out=out[start : start + ROW_BLOCK])
    return out[:n]


def linear(x: Tensor, w: Tensor) -> Tensor:
    """``x @ w.T`` for ``x`` of shape (in,) or (n, in) and ``w`` of shape (out, in)."""
    x, w = as_tensor(x), as_tensor(w)

    def backward(g):
        if x.requires_grad:
            _accumulate(x, g @ w.data)
        if w.requires_grad:
            if x.ndim == 1:
                _accumulate(w, np.outer(g, x.data))
            else:
                _accumulate(w, g.T @ x.data)

    if x.ndim == 1:
        out = row_stable_matmul(x.data[None, :], w.data.T)[0]
    else:
        out = row_stable_matmul(x.data, w.data.T)
    return _record(out, (x, w), backward)


# --- reductions -------------------------------------------------------------


def tensor_sum(x: Tensor, axis=None) -> Tensor:
    def backward(g):
        if axis is None:
            _accumulate(x, np.broadcast_to(g, x.shape))
        else:
            axes = (axis,) if isinstance(axis, int) else tuple(axis)
            axes = tuple(a % x.ndim for a in axes)
            _accumulate(x, np.broadcast_to(np.expand_dims(g, axes), x.shape))

    return _record(np.asarray(x.data.sum(axis=axis)), (x,), backward)


def mean(x: Tensor) -> Tensor:
    return mul(tensor_sum(x), 1.0 / x.size)


def logsumexp(x: Tensor, axis: int) -> Tensor:
    """Numerically stable log-sum-exp along one axis (max-shift)."""
    shift = np.max(x.data, axis=axis, keepdims=True)
    z = np.exp(x.data - shift)
    total = z.sum(axis=axis, keepdims=True)
    out = np.squeeze(shift + np.log(total), axis=axis)

    def backward(g):
        _accumulate(x, np.expand_dims(g, axis) * (z / total))

    return _record(out, (x,), backward)


# --- shape manipulation -----------------------------------------------------


def reshape(x: Tensor, shape) -> Tensor:
    def backward(g):
        _accumulate(x, g.reshape(x.shape))

    return _record(x.data.reshape(shape), (x,), backward)


def _is_basic_index(index) -> bool:
    parts = index if isinstance(index, tuple) else (index,)
    return all(p is None or p is Ellipsis or isinstance(p, (int, np.integer, slice)) for p in parts)


def getitem(x: Tensor, index) -> Tensor:
    basic = _is_basic_index(index)

    def backward(g):
        if not x.requires_grad:
            return
        if basic:
            if x.grad is None:
                x.grad = np.zeros_like(x.data)
            x.grad[index] += g
        else:
            _accumulate_at(x, index, g)

    return _record(np.array(x.data[index]), (x,), backward)


def take_rows(table: Tensor, ids) -> Tensor:
    """Gather rows of a 2-D table (embedding lookup)."""
    ids = np.asarray(ids, dtype=np.intp)

    def backward(g):
        _accumulate_at(table, ids, g)

    return _record(table.data[ids], (table,), backward)


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = tuple(as_tensor(t) for t in tensors)
    if len(tensors) == 1:
        return tensors[0]
    data = np.concatenate([t.data for t in tensors], axis=axis)
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        for t, piece in zip(tensors, np.split(g, bounds, axis=axis)):
            _accumulate(t, piece)

    return _record(data, tensors, backward)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = tuple(as_tensor(t) for t in tensors)
    data = np.stack([t.data for t in tensors], axis=axis)

    def backward(g):
        for i, t in enumerate(tensors):
            _accumulate(t, np.take(g, i, axis=axis))

    return _record(data, tensors, backward)


# --- gradient extraction ----------------------------------------------------


def gradients(loss: Tensor, params: Iterable[Tensor]) -> list[np.ndarray]:
    """d(loss)/d(param) for each parameter; zeros for parameters off the graph."""
    params = list(params)
    for p in params:
        p.grad = None
    loss.backward()
    return [np.zeros_like(p.data) if p.grad is None else p.grad for p in params]
