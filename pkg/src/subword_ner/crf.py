"""Linear-chain CRF with virtual START/STOP states.

Transition matrices are ``(K+2, K+2)`` with ``transitions[a, b]`` the score of
moving from tag ``a`` to tag ``b``; row/column ``K`` is START and ``K+1`` is
STOP. Entries that would enter START or leave STOP hold :data:`IMPOSSIBLE`
and are never read by the scoring code, so they receive no gradient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, ShapeError
from .numeric.tensor import (
    Tensor,
    _accumulate,
    _record,
    add,
    as_tensor,
    getitem,
    linear,
    logsumexp,
    mul,
    no_grad,
    parameter,
    reshape,
    stack,
    sub,
    tensor_sum,
    where,
)

IMPOSSIBLE = -1e4


class TagSet:
    """Ordered BIO2 labels: ``O`` first, then ``B-X``/``I-X`` pairs by type name."""

    def __init__(self, entity_types: Sequence[str]):
        types = sorted(set(entity_types))
        labels = ["O"]
        for t in types:
            if not t:
                raise DomainError("empty entity type")
            labels += [f"B-{t}", f"I-{t}"]
        self.types = tuple(types)
        self.labels = tuple(labels)
        self._index = {label: i for i, label in enumerate(labels)}

    @classmethod
    def from_labels(cls, labels) -> "TagSet":
        types = {label[2:] for label in labels if label != "O"}
        return cls(types)

    def id_of(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise DomainError(f"label {label!r} not in tag set") from None

    def label(self, i: int) -> str:
        return self.labels[i]

    def __len__(self) -> int:
        return len(self.labels)

    def __eq__(self, other) -> bool:
        return isinstance(other, TagSet) and self.labels == other.labels

    def __repr__(self) -> str:
        return f"TagSet({list(self.labels)})"


def init_transitions(n_tags: int, rng: np.random.Generator | None = None) -> np.ndarray:
    size = n_tags + 2
    if rng is None:
        trans = np.zeros((size, size))
    else:
        bound = math.sqrt(6.0 / (2 * size))
        trans = rng.uniform(-bound, bound, size=(size, size))
    trans[:, n_tags] = IMPOSSIBLE
    trans[n_tags + 1, :] = IMPOSSIBLE
    return trans


@dataclass
class CRFParams:
    """Transitions plus the projection from word-level states to tag scores."""

    transitions: Tensor
    proj_w: Tensor
    proj_b: Tensor

    @property
    def n_tags(self) -> int:
        return self.proj_w.shape[0]

    @classmethod
    def init(cls, n_tags: int, input_dim: int, rng: np.random.Generator) -> "CRFParams":
        bound = math.sqrt(6.0 / (n_tags + input_dim))
        return cls(
            transitions=parameter(init_transitions(n_tags, rng)),
            proj_w=parameter(rng.uniform(-bound, bound, size=(n_tags, input_dim))),
            proj_b=parameter(np.zeros(n_tags)),
        )

    def emit(self, states: Tensor) -> Tensor:
        return add(linear(states, self.proj_w), self.proj_b)

    def named(self) -> dict[str, Tensor]:
        return {"crf.transitions": self.transitions, "crf.proj_w": self.proj_w, "crf.proj_b": self.proj_b}


def _transition_array(transitions) -> np.ndarray:
    return transitions.data if isinstance(transitions, Tensor) else np.asarray(transitions, dtype=np.float64)


def _check(emissions: np.ndarray, trans: np.ndarray) -> tuple[int, int]:
    if emissions.ndim != 2 or emissions.shape[0] < 1:
        raise ShapeError(f"emissions must be T x K with T >= 1, got {emissions.shape}")
    T, K = emissions.shape
    if trans.shape != (K + 2, K + 2):
        raise ShapeError(f"transitions must be {(K + 2, K + 2)}, got {trans.shape}")
    return T, K


def score_sequence(emissions, tags: Sequence[int], transitions) -> float:
    """Unnormalized score: emissions, then START, inner transitions, STOP, summed in that order."""
    e = np.asarray(emissions.data if isinstance(emissions, Tensor) else emissions, dtype=np.float64)
    trans = _transition_array(transitions)
    T, K = _check(e, trans)
    if len(tags) != T:
        raise ShapeError(f"{len(tags)} tags for {T} positions")
    if any(not 0 <= y < K for y in tags):
        raise DomainError("tag id out of range")
    start, stop = K, K + 1
    total = 0.0
    for t, y in enumerate(tags):
        total += float(e[t, y])
    total += float(trans[start, tags[0]])
    for t in range(1, T):
        total += float(trans[tags[t - 1], tags[t]])
    total += float(trans[tags[-1], stop])
    return total


def viterbi_decode(emissions, transitions) -> tuple[list[int], float]:
    """Highest-scoring tag path; ties go to the lowest tag id at every backpointer."""
    e = np.asarray(emissions.data if isinstance(emissions, Tensor) else emissions, dtype=np.float64)
    trans = _transition_array(transitions)
    T, K = _check(e, trans)
    inner = trans[:K, :K]
    delta = trans[K, :K] + e[0]
    backpointers = []
    cols = np.arange(K)
    for t in range(1, T):
        cand = delta[:, None] + inner
        best_prev = np.argmax(cand, axis=0)
        delta = cand[best_prev, cols] + e[t]
        backpointers.append(best_prev)
    last = int(np.argmax(delta + trans[:K, K + 1]))
    path = [last]
    for bp in reversed(backpointers):
        path.append(int(bp[path[-1]]))
    path.reverse()
    return path, score_sequence(e, path, trans)


# --- differentiable, batched ------------------------------------------------


def batch_log_partition(steps: Sequence[Tensor], transitions: Tensor, mask: np.ndarray) -> Tensor:
    """Forward algorithm over a padded batch.

    ``steps[t]`` holds (B, K) emission scores for position ``t``; ``mask``
    is (B, T) and true on real tokens. Returns the (B,) log-partition.
    """
    transitions = as_tensor(transitions)
    B, K = steps[0].shape
    start = getitem(transitions, (K, slice(0, K)))
    stop = getitem(transitions, (slice(0, K), K + 1))
    inner = reshape(getitem(transitions, (slice(0, K), slice(0, K))), (1, K, K))
    alpha = add(steps[0], start)
    for t in range(1, len(steps)):
        scores = add(reshape(alpha, (B, K, 1)), inner)
        new = add(logsumexp(scores, axis=1), steps[t])
        alpha = where(mask[:, t : t + 1], new, alpha)
    return logsumexp(add(alpha, stop), axis=1)


def batch_gold_score(steps: Sequence[Tensor], transitions: Tensor, tags: np.ndarray, mask: np.ndarray) -> Tensor:
    """(B,) scores of the gold paths of a padded batch."""
    transitions = as_tensor(transitions)
    B, K = steps[0].shape
    T = len(steps)
    lengths = mask.sum(axis=1)
    onehot = np.zeros((B, T, K))
    counts = np.zeros((B, K + 2, K + 2))
    for b in range(B):
        n = int(lengths[b])
        path = tags[b, :n]
        onehot[b, np.arange(n), path] = 1.0
        counts[b, K, path[0]] += 1.0
        np.add.at(counts[b], (path[:-1], path[1:]), 1.0)
        counts[b, path[-1], K + 1] += 1.0
    emitted = tensor_sum(mul(stack(steps, axis=1), onehot), axis=(1, 2))
    moved = tensor_sum(mul(reshape(transitions, (1, K + 2, K + 2)), counts), axis=(1, 2))
    return add(emitted, moved)


def batch_nll(steps: Sequence[Tensor], transitions: Tensor, tags: np.ndarray, mask: np.ndarray) -> Tensor:
    """Per-utterance negative log-likelihood, shape (B,).

    Rounding can leave a tiny negative value when one path holds all the
    mass; the value is clipped at 0 while the gradient passes through.
    """
    diff = sub(batch_log_partition(steps, transitions, mask), batch_gold_score(steps, transitions, tags, mask))
    return _record(np.maximum(diff.data, 0.0), (diff,), lambda g: _accumulate(diff, g))


def _single(emissions) -> tuple[list[Tensor], np.ndarray]:
    e = as_tensor(emissions)
    if e.ndim != 2 or e.shape[0] < 1:
        raise ShapeError(f"emissions must be T x K with T >= 1, got {e.shape}")
    steps = [getitem(e, slice(t, t + 1)) for t in range(e.shape[0])]
    return steps, np.ones((1, e.shape[0]), dtype=bool)


def log_partition(emissions, transitions) -> float:
    """log of the sum of exp(score) over all K**T tag paths."""
    trans = as_tensor(transitions)
    _check(as_tensor(emissions).data, trans.data)
    with no_grad():
        steps, mask = _single(emissions)
        return batch_log_partition(steps, trans, mask).item()


def nll_loss(emissions, tags: Sequence[int], transitions) -> Tensor:
    """``log_partition - score(gold)`` as a differentiable scalar."""
    trans = as_tensor(transitions)
    T, K = _check(as_tensor(emissions).data, trans.data)
    if len(tags) != T:
        raise ShapeError(f"{len(tags)} tags for {T} positions")
    if any(not 0 <= y < K for y in tags):
        raise DomainError("tag id out of range")
    steps, mask = _single(emissions)
    return tensor_sum(batch_nll(steps, trans, np.asarray([tags], dtype=np.intp), mask))
