"""Coupled-gate peephole LSTM, bidirectional encoding and word embedding composition."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import expit

from .errors import DomainError, ShapeError
from .featurize import UNITS, WordFeatures
from .numeric.tensor import (
    Tensor,
    _accumulate,
    _record,
    add,
    as_tensor,
    concat,
    getitem,
    linear,
    mul,
    parameter,
    reshape,
    row_stable_matmul,
    sigmoid,
    take_rows,
    tanh,
)


def glorot(rng: np.random.Generator, fan_out: int, fan_in: int, shape=None) -> Tensor:
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return parameter(rng.uniform(-bound, bound, size=shape or (fan_out, fan_in)))


def embedding_table(rng: np.random.Generator, rows: int, dim: int) -> Tensor:
    return parameter(0.1 * rng.standard_normal((rows, dim)))


@dataclass
class LSTMCellParams:
    w_xi: Tensor
    w_hi: Tensor
    w_xc: Tensor
    w_hc: Tensor
    w_xo: Tensor
    w_ho: Tensor
    w_co: Tensor  # peephole, elementwise
    b_i: Tensor
    b_c: Tensor
    b_o: Tensor

    NAMES = ("w_xi", "w_hi", "w_xc", "w_hc", "w_xo", "w_ho", "w_co", "b_i", "b_c", "b_o")

    @property
    def input_dim(self) -> int:
        return self.w_xi.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.w_xi.shape[0]

    @classmethod
    def init(cls, input_dim: int, hidden_dim: int, rng: np.random.Generator) -> "LSTMCellParams":
        h, d = hidden_dim, input_dim
        return cls(
            w_xi=glorot(rng, h, d),
            w_hi=glorot(rng, h, h),
            w_xc=glorot(rng, h, d),
            w_hc=glorot(rng, h, h),
            w_xo=glorot(rng, h, d),
            w_ho=glorot(rng, h, h),
            w_co=glorot(rng, h, h, shape=(h,)),
            b_i=parameter(np.zeros(h)),
            b_c=parameter(np.zeros(h)),
            b_o=parameter(np.zeros(h)),
        )

    @staticmethod
    def shapes(input_dim: int, hidden_dim: int) -> dict[str, tuple[int, ...]]:
        h, d = hidden_dim, input_dim
        return {
            "w_xi": (h, d), "w_hi": (h, h), "w_xc": (h, d), "w_hc": (h, h),
            "w_xo": (h, d), "w_ho": (h, h), "w_co": (h,),
            "b_i": (h,), "b_c": (h,), "b_o": (h,),
        }

    def named(self, prefix: str) -> dict[str, Tensor]:
        return {f"{prefix}.{n}": getattr(self, n) for n in self.NAMES}

    def check(self) -> None:
        expected = self.shapes(self.input_dim, self.hidden_dim)
        for n in self.NAMES:
            if getattr(self, n).shape != expected[n]:
                raise ShapeError(f"LSTM parameter {n} has shape {getattr(self, n).shape}, expected {expected[n]}")


@dataclass
class LSTMState:
    h: Tensor
    c: Tensor

    @classmethod
    def zeros(cls, hidden_dim: int, batch: int | None = None) -> "LSTMState":
        shape = (hidden_dim,) if batch is None else (batch, hidden_dim)
        return cls(Tensor(np.zeros(shape)), Tensor(np.zeros(shape)))


def lstm_cell_step(x_t, prev: LSTMState, params: LSTMCellParams, mask: np.ndarray | None = None) -> LSTMState:
    """One step of the coupled input/forget gate LSTM with a current-cell peephole.

    The forget gate is ``1 - i``, so the new cell is a convex combination of
    the old cell and the candidate; the output gate reads the *new* cell.
    Works on a single vector or a batch of row vectors. Rows whose ``mask``
    entry is false keep ``prev`` unchanged.

    Recorded on the tape as a single node with a hand-written backward pass;
    :func:`lstm_cell_step_composed` builds the same function from primitive
    ops and serves as its cross-check.
    """
    x_t = as_tensor(x_t)
    _check_step(x_t, prev, params)
    if x_t.ndim == 1:
        state = lstm_cell_step(
            reshape(x_t, (1, -1)),
            LSTMState(reshape(prev.h, (1, -1)), reshape(prev.c, (1, -1))),
            params,
            None if mask is None else np.reshape(mask, (1, 1)),
        )
        return LSTMState(reshape(state.h, (-1,)), reshape(state.c, (-1,)))
    return _fused_step(x_t, prev.h, prev.c, params, mask)


def _check_step(x_t: Tensor, prev: LSTMState, params: LSTMCellParams) -> None:
    if x_t.shape[-1] != params.input_dim:
        raise ShapeError(f"input has width {x_t.shape[-1]}, cell expects {params.input_dim}")
    if prev.h.shape[-1] != params.hidden_dim or prev.c.shape != prev.h.shape:
        raise ShapeError(f"state has width {prev.h.shape[-1]}, cell expects {params.hidden_dim}")
    if x_t.ndim != prev.h.ndim or (x_t.ndim == 2 and x_t.shape[0] != prev.h.shape[0]):
        raise ShapeError("input and state batch shapes differ")


def _fused_step(x: Tensor, h_prev: Tensor, c_prev: Tensor, p: LSTMCellParams, mask) -> LSTMState:
    X, H, C = x.data, h_prev.data, c_prev.data
    mm = row_stable_matmul
    i = expit(mm(X, p.w_xi.data.T) + mm(H, p.w_hi.data.T) + p.b_i.data)
    g = np.tanh(mm(X, p.w_xc.data.T) + mm(H, p.w_hc.data.T) + p.b_c.data)
    c = (1.0 - i) * C + i * g
    o = expit(mm(X, p.w_xo.data.T) + mm(H, p.w_ho.data.T) + p.w_co.data * c + p.b_o.data)
    tc = np.tanh(c)
    h = o * tc
    if mask is not None:
        h = np.where(mask, h, H)
        c_out = np.where(mask, c, C)
    else:
        c_out = c
    hidden = h.shape[1]
    weights = (p.w_xi, p.w_hi, p.w_xc, p.w_hc, p.w_xo, p.w_ho, p.w_co, p.b_i, p.b_c, p.b_o)

    def backward(grad):
        gh, gc = grad[:, :hidden], grad[:, hidden:]
        if mask is not None:
            keep = mask.astype(np.float64)
            carry_h, carry_c = gh * (1.0 - keep), gc * (1.0 - keep)
            gh, gc = gh * keep, gc * keep
        d_ao = gh * tc * o * (1.0 - o)
        dc = gc + gh * o * (1.0 - tc * tc) + d_ao * p.w_co.data
        d_ai = dc * (g - C) * i * (1.0 - i)
        d_ag = dc * i * (1.0 - g * g)
        dc_prev = dc * (1.0 - i)
        if x.requires_grad:
            _accumulate(x, d_ai @ p.w_xi.data + d_ag @ p.w_xc.data + d_ao @ p.w_xo.data)
        if h_prev.requires_grad:
            dh = d_ai @ p.w_hi.data + d_ag @ p.w_hc.data + d_ao @ p.w_ho.data
            _accumulate(h_prev, dh + carry_h if mask is not None else dh)
        if c_prev.requires_grad:
            _accumulate(c_prev, dc_prev + carry_c if mask is not None else dc_prev)
        for w, d, inp in (
            (p.w_xi, d_ai, X), (p.w_hi, d_ai, H), (p.w_xc, d_ag, X),
            (p.w_hc, d_ag, H), (p.w_xo, d_ao, X), (p.w_ho, d_ao, H),
        ):
            if w.requires_grad:
                _accumulate(w, d.T @ inp)
        _accumulate(p.w_co, (d_ao * c).sum(axis=0))
        _accumulate(p.b_i, d_ai.sum(axis=0))
        _accumulate(p.b_c, d_ag.sum(axis=0))
        _accumulate(p.b_o, d_ao.sum(axis=0))

    joint = _record(np.concatenate([h, c_out], axis=1), (x, h_prev, c_prev, *weights), backward)
    return LSTMState(getitem(joint, (slice(None), slice(0, hidden))), getitem(joint, (slice(None), slice(hidden, None))))


def lstm_cell_step_composed(x_t, prev: LSTMState, params: LSTMCellParams) -> LSTMState:
    """The same cell written with primitive tape ops only."""
    x_t = as_tensor(x_t)
    _check_step(x_t, prev, params)
    h_prev, c_prev = prev.h, prev.c
    i_t = sigmoid(add(add(linear(x_t, params.w_xi), linear(h_prev, params.w_hi)), params.b_i))
    candidate = tanh(add(add(linear(x_t, params.w_xc), linear(h_prev, params.w_hc)), params.b_c))
    c_t = add(mul(1.0 - i_t, c_prev), mul(i_t, candidate))
    o_t = sigmoid(
        add(add(add(linear(x_t, params.w_xo), linear(h_prev, params.w_ho)), mul(params.w_co, c_t)), params.b_o)
    )
    h_t = mul(o_t, tanh(c_t))
    return LSTMState(h_t, c_t)


def run_lstm(
    xs: Sequence[Tensor],
    params: LSTMCellParams,
    masks: Sequence[np.ndarray] | None = None,
    reverse: bool = False,
) -> list[Tensor]:
    """Hidden state after each position, aligned with ``xs``.

    ``masks[t]`` is a boolean column (batch, 1); where it is false the
    previous state is carried through unchanged, so padded positions never
    influence real ones in either direction.
    """
    if not xs:
        raise DomainError("empty sequence")
    first = as_tensor(xs[0])
    batch = first.shape[0] if first.ndim == 2 else None
    state = LSTMState.zeros(params.hidden_dim, batch)
    outputs: list[Tensor | None] = [None] * len(xs)
    order = range(len(xs) - 1, -1, -1) if reverse else range(len(xs))
    for t in order:
        state = lstm_cell_step(xs[t], state, params, None if masks is None else masks[t])
        outputs[t] = state.h
    return outputs


def bilstm_final_states(
    xs: Sequence[Tensor],
    fwd: LSTMCellParams,
    bwd: LSTMCellParams,
    masks: Sequence[np.ndarray] | None = None,
) -> Tensor:
    """Forward state after the last input joined with backward state after the first."""
    forward = run_lstm(xs, fwd, masks)
    backward = run_lstm(xs, bwd, masks, reverse=True)
    return concat([forward[-1], backward[0]], axis=-1)


@dataclass
class SubwordEncoders:
    """Per-unit embedding tables and BiLSTMs, plus the optional word table."""

    units: tuple[str, ...]
    tables: dict[str, Tensor]
    fwd: dict[str, LSTMCellParams]
    bwd: dict[str, LSTMCellParams]
    pad_ids: dict[str, int]
    word_table: Tensor | None = None

    @classmethod
    def init(
        cls,
        units: Sequence[str],
        vocab_sizes: dict[str, int],
        pad_ids: dict[str, int],
        rng: np.random.Generator,
        embed_dim: int = 35,
        hidden_dim: int = 35,
        word_embed_dim: int | None = None,
    ) -> "SubwordEncoders":
        units = canonical_units(units)
        tables, fwd, bwd = {}, {}, {}
        for u in units:
            tables[u] = embedding_table(rng, vocab_sizes[u], embed_dim)
            fwd[u] = LSTMCellParams.init(embed_dim, hidden_dim, rng)
            bwd[u] = LSTMCellParams.init(embed_dim, hidden_dim, rng)
        word_table = None
        if word_embed_dim is not None:
            word_table = embedding_table(rng, vocab_sizes["word"], word_embed_dim)
        return cls(units, tables, fwd, bwd, {u: pad_ids[u] for u in units}, word_table)

    @property
    def output_dim(self) -> int:
        width = sum(2 * self.fwd[u].hidden_dim for u in self.units)
        if self.word_table is not None:
            width += self.word_table.shape[1]
        return width

    def named(self) -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        for u in self.units:
            out[f"{u}.embed"] = self.tables[u]
            out.update(self.fwd[u].named(f"{u}.fwd"))
            out.update(self.bwd[u].named(f"{u}.bwd"))
        if self.word_table is not None:
            out["word.embed"] = self.word_table
        return out


def canonical_units(units: Sequence[str]) -> tuple[str, ...]:
    """Enabled units in the fixed concatenation order (char, phoneme, byte)."""
    unknown = set(units) - set(UNITS)
    if unknown:
        raise DomainError(f"unknown subword units: {sorted(unknown)}")
    return tuple(u for u in UNITS if u in units)


def pad_sequences(seqs: Sequence[Sequence[int]], pad_id: int) -> tuple[np.ndarray, np.ndarray]:
    """Right-pad id sequences; returns ``(ids, mask)`` of shape (n, max_len)."""
    longest = max(len(s) for s in seqs)
    ids = np.full((len(seqs), longest), pad_id, dtype=np.intp)
    mask = np.zeros((len(seqs), longest), dtype=bool)
    for row, s in enumerate(seqs):
        ids[row, : len(s)] = s
        mask[row, : len(s)] = True
    return ids, mask


def embed_words(features: Sequence[WordFeatures], enc: SubwordEncoders) -> Tensor:
    """Word embeddings for a batch of words, one row each."""
    if not features:
        raise DomainError("no words to embed")
    parts = []
    for u in enc.units:
        seqs = [f.ids(u) for f in features]
        if any(len(s) == 0 for s in seqs):
            raise DomainError(f"missing {u} features")
        ids, mask = pad_sequences(seqs, enc.pad_ids[u])
        xs = [take_rows(enc.tables[u], ids[:, t]) for t in range(ids.shape[1])]
        masks = [mask[:, t : t + 1] for t in range(ids.shape[1])]
        parts.append(bilstm_final_states(xs, enc.fwd[u], enc.bwd[u], masks))
    if enc.word_table is not None:
        if any(f.word_id is None for f in features):
            raise DomainError("word embeddings enabled but word id missing")
        parts.append(take_rows(enc.word_table, [f.word_id for f in features]))
    return concat(parts, axis=1)


def embed_word(features: WordFeatures, enc: SubwordEncoders) -> Tensor:
    """Embedding of one word: (V_c, V_ph, V_by, word vector) for the enabled parts."""
    return getitem(embed_words([features], enc), 0)
