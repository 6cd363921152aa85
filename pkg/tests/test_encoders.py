import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import lstm_run_scalar, lstm_step_scalar
from subword_ner.encoders import (
    LSTMCellParams, LSTMState, SubwordEncoders, bilstm_final_states, canonical_units, embed_word, embed_words,
    lstm_cell_step, lstm_cell_step_composed, pad_sequences, run_lstm,
)
from subword_ner.errors import DomainError, ShapeError
from subword_ner.experiments import unit_subsets
from subword_ner.featurize import Featurizer
from subword_ner.numeric import Tensor, check_gradients, parameter
from subword_ner.numeric import tensor as T


def random_cell(rng, d, h, scale=1.0):
    p = LSTMCellParams.init(d, h, rng)
    for n in p.NAMES:
        getattr(p, n).data = scale * rng.normal(size=getattr(p, n).shape)
    return p


def as_lists(p):
    return {n: getattr(p, n).data.tolist() for n in p.NAMES}


def zero_cell(d, h):
    p = LSTMCellParams.init(d, h, np.random.default_rng(0))
    for n in p.NAMES:
        getattr(p, n).data = np.zeros(getattr(p, n).shape)
    return p


def test_zero_params_give_zero_state():
    s = lstm_cell_step(np.ones(3), LSTMState.zeros(4), zero_cell(3, 4))
    assert np.array_equal(s.h.data, np.zeros(4)) and np.array_equal(s.c.data, np.zeros(4))


@pytest.mark.parametrize("b_i,expected", [(50.0, 0.0), (-50.0, 7.0)])
def test_coupled_gate_saturation(b_i, expected):
    p = zero_cell(2, 3)
    p.b_i.data = np.full(3, b_i)
    prev = LSTMState(Tensor(np.zeros(3)), Tensor(np.full(3, 7.0)))
    s = lstm_cell_step(np.zeros(2), prev, p)
    assert np.allclose(s.c.data, expected, atol=1e-12)


def test_matches_scalar_oracle(rng):
    for _ in range(20):
        d, h = rng.integers(1, 5), rng.integers(1, 5)
        p = random_cell(rng, d, h)
        x, hp, cp = rng.normal(size=d), rng.uniform(-1, 1, size=h), rng.normal(size=h)
        s = lstm_cell_step(x, LSTMState(Tensor(hp), Tensor(cp)), p)
        oh, oc = lstm_step_scalar(x.tolist(), hp.tolist(), cp.tolist(), as_lists(p))
        assert np.max(np.abs(s.h.data - oh)) < 1e-12
        assert np.max(np.abs(s.c.data - oc)) < 1e-12


def test_peephole_reads_current_cell(rng):
    # With only w_co and the candidate path active, h depends on the updated cell.
    p = zero_cell(1, 1)
    p.w_xc.data[:] = 5.0
    p.w_co.data[:] = 3.0
    s = lstm_cell_step(np.array([1.0]), LSTMState.zeros(1), p)
    c = 0.5 * np.tanh(5.0)
    expected = 1 / (1 + np.exp(-3.0 * c)) * np.tanh(c)
    assert s.h.data[0] == pytest.approx(expected, abs=1e-15)


def test_fused_equals_composed(rng):
    p = random_cell(rng, 3, 4)
    x, h, c = rng.normal(size=(2, 3)), rng.uniform(-1, 1, (2, 4)), rng.normal(size=(2, 4))
    a = lstm_cell_step(x, LSTMState(Tensor(h), Tensor(c)), p)
    b = lstm_cell_step_composed(x, LSTMState(Tensor(h), Tensor(c)), p)
    assert np.allclose(a.h.data, b.h.data, atol=1e-14, rtol=0)
    assert np.allclose(a.c.data, b.c.data, atol=1e-14, rtol=0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_convex_cell_update(seed):
    gen = np.random.default_rng(seed)
    p = random_cell(gen, 3, 5, scale=2.0)
    x, h, c = gen.normal(size=3), gen.uniform(-1, 1, 5), gen.normal(scale=3, size=5)
    s = lstm_cell_step(x, LSTMState(Tensor(h), Tensor(c)), p)
    g = np.tanh(p.w_xc.data @ x + p.w_hc.data @ h + p.b_c.data)
    lo, hi = np.minimum(c, g), np.maximum(c, g)
    assert np.all(s.c.data >= lo - 1e-12) and np.all(s.c.data <= hi + 1e-12)
    assert np.all(np.abs(s.h.data) < 1)


def test_mask_carries_state(rng):
    p = random_cell(rng, 2, 3)
    h, c = rng.normal(size=(2, 3)), rng.normal(size=(2, 3))
    mask = np.array([[True], [False]])
    s = lstm_cell_step(rng.normal(size=(2, 2)), LSTMState(Tensor(h), Tensor(c)), p, mask)
    assert np.array_equal(s.h.data[1], h[1]) and np.array_equal(s.c.data[1], c[1])


def test_step_shape_errors(rng):
    p = random_cell(rng, 3, 4)
    with pytest.raises(ShapeError):
        lstm_cell_step(np.ones(2), LSTMState.zeros(4), p)
    with pytest.raises(ShapeError):
        lstm_cell_step(np.ones(3), LSTMState.zeros(5), p)


def test_bilstm_oracle(rng):
    fwd, bwd = random_cell(rng, 2, 3), random_cell(rng, 2, 3)
    xs = rng.normal(size=(3, 2))
    out = bilstm_final_states([Tensor(x) for x in xs], fwd, bwd).data
    expected = lstm_run_scalar(xs.tolist(), as_lists(fwd), 3) + lstm_run_scalar(xs[::-1].tolist(), as_lists(bwd), 3)
    assert np.max(np.abs(out - expected)) < 1e-12


def test_bilstm_single_step_symmetry(rng):
    p = random_cell(rng, 2, 3)
    out = bilstm_final_states([Tensor(rng.normal(size=2))], p, p).data
    assert np.array_equal(out[:3], out[3:])


def test_bilstm_zero_params():
    out = bilstm_final_states([Tensor(np.ones(2))] * 4, zero_cell(2, 3), zero_cell(2, 3)).data
    assert np.array_equal(out, np.zeros(6))


def test_empty_sequence_rejected(rng):
    with pytest.raises(DomainError):
        run_lstm([], random_cell(rng, 2, 2))


def test_padding_does_not_change_final_states(rng):
    fwd, bwd = random_cell(rng, 2, 3), random_cell(rng, 2, 3)
    xs = rng.normal(size=(2, 2))
    alone = bilstm_final_states([Tensor(x[None]) for x in xs], fwd, bwd).data[0]
    padded_x = [Tensor(np.stack([x, rng.normal(size=2)])) for x in xs] + [Tensor(rng.normal(size=(2, 2)))]
    masks = [np.array([[True], [True]])] * 2 + [np.array([[False], [True]])]
    batched = bilstm_final_states(padded_x, fwd, bwd, masks).data[0]
    assert np.array_equal(alone, batched)


def test_pad_sequences():
    ids, mask = pad_sequences([[1, 2, 3], [4]], 9)
    assert ids.tolist() == [[1, 2, 3], [4, 9, 9]]
    assert mask.tolist() == [[True] * 3, [True, False, False]]


def make_encoders(units, word=False, dims=(35, 35, 64)):
    feat = Featurizer.from_training_words(["dark", "schön"])
    sizes = {u: feat.vocab_size(u) for u in ("char", "phoneme", "byte", "word")}
    pads = {u: feat.pad_id(u) for u in ("char", "phoneme", "byte")}
    enc = SubwordEncoders.init(units, sizes, pads, np.random.default_rng(0), dims[0], dims[1], dims[2] if word else None)
    return feat, enc


@pytest.mark.parametrize("units", unit_subsets())
@pytest.mark.parametrize("word", [False, True])
def test_output_width(units, word):
    feat, enc = make_encoders(units, word)
    width = embed_word(feat.features("dark"), enc).shape
    assert width == (2 * 35 * len(units) + (64 if word else 0),)
    assert enc.output_dim == width[0]


def test_documented_widths():
    assert make_encoders(("char", "phoneme", "byte"))[1].output_dim == 210
    assert make_encoders(("char", "phoneme", "byte"), True)[1].output_dim == 274
    assert make_encoders(("char",))[1].output_dim == 70


def test_embed_word_pure_and_order_sensitive():
    feat, enc = make_encoders(("char",))
    a = embed_word(feat.features("dark"), enc).data
    assert np.array_equal(a, embed_word(feat.features("dark"), enc).data)
    assert not np.allclose(a, embed_word(feat.features("krad"), enc).data)


def test_concat_order():
    feat, enc = make_encoders(("byte", "char"), True)
    assert enc.units == ("char", "byte")
    f = feat.features("dark")
    full = embed_word(f, enc).data
    char_only = bilstm_final_states(
        [T.take_rows(enc.tables["char"], [i]) for i in f.char_ids], enc.fwd["char"], enc.bwd["char"]
    ).data[0]
    assert np.array_equal(full[:70], char_only)
    assert np.array_equal(full[140:], enc.word_table.data[f.word_id])


def test_batched_embedding_matches_single():
    feat, enc = make_encoders(("char", "phoneme", "byte"), True)
    words = ["dark", "schön", "a", "zzzzzzz"]
    batch = embed_words([feat.features(w) for w in words], enc).data
    for i, w in enumerate(words):
        assert np.array_equal(batch[i], embed_word(feat.features(w), enc).data)


def test_unknown_unit():
    with pytest.raises(DomainError):
        canonical_units(["char", "syllable"])


def _cell_params(p):
    return [getattr(p, n) for n in p.NAMES]


def test_cell_gradients(rng):
    p = random_cell(rng, 3, 4)
    x, h0, c0 = parameter(rng.normal(size=(2, 3))), parameter(rng.normal(size=(2, 4))), parameter(rng.normal(size=(2, 4)))
    w = Tensor(rng.normal(size=(2, 8)))
    mask = np.array([[True], [False]])

    def loss():
        s = lstm_cell_step(x, LSTMState(h0, c0), p, mask)
        return T.tensor_sum(T.mul(T.concat([s.h, s.c], axis=1), w))

    assert check_gradients(loss, [x, h0, c0, *_cell_params(p)]) < 1e-4


def test_bilstm_and_embed_gradients():
    feat, enc = make_encoders(("char", "phoneme", "byte"), True, dims=(2, 3, 2))
    words = [feat.features(w) for w in ("dark", "schön", "x")]
    w = Tensor(np.random.default_rng(5).normal(size=(3, enc.output_dim)))
    loss = lambda: T.tensor_sum(T.mul(embed_words(words, enc), w))
    assert check_gradients(loss, list(enc.named().values())) < 1e-4
