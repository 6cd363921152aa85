import numpy as np
import pytest

from subword_ner.corpus_io.corpus import Corpus, TaggedUtterance
from subword_ner.errors import DomainError, TrainingDivergedError
from subword_ner.model import Batch
from subword_ner.numeric import Tensor, check_gradients
from subword_ner.numeric import tensor as T
from subword_ner.numeric.tensor import mean
from subword_ner.synthetic import SyntheticLanguage
from subword_ner.featurize import compile_lexicon
from subword_ner.training import (
    LANGUAGE_BATCH_SIZES, TrainConfig, build_tagger, forward_utterance, make_batches, train,
)


def examples_for(tagger, corpus):
    return [tagger.example(u.tokens, u.labels) for u in corpus]


def test_defaults():
    cfg = TrainConfig()
    assert (cfg.learning_rate, cfg.max_epochs, cfg.dropout_rate) == (0.0007, 40, 0.5)
    assert (cfg.subword_embed_dim, cfg.subword_hidden_dim, cfg.word_embed_dim, cfg.word_hidden_dim) == (35, 35, 64, 128)
    assert LANGUAGE_BATCH_SIZES == {"en": 1024, "de": 256, "fr": 4, "es": 4}


@pytest.mark.parametrize("changes", [
    {"batch_size": 0}, {"dropout_rate": 1.0}, {"dropout_rate": -0.1}, {"max_epochs": 0},
    {"learning_rate": 0.0}, {"units": (), "use_word_embeddings": False}, {"units": ("syllable",)},
])
def test_config_validation(changes):
    with pytest.raises(DomainError):
        TrainConfig().replace(**changes)


def test_word_only_config_is_valid():
    assert TrainConfig(units=(), use_word_embeddings=True).model_config().embedding_width == 64


@pytest.fixture
def small(toy_corpus, toy_lexicon, tiny_config):
    tagger = build_tagger(tiny_config, toy_corpus, toy_lexicon, np.random.default_rng(0))
    return tagger, examples_for(tagger, toy_corpus)


def test_batch_sizes(small):
    tagger, ex = small
    ten = (ex * 4)[:10]
    assert [b.size for b in make_batches(ten, 4, np.random.default_rng(0))] == [4, 4, 2]
    assert [b.size for b in make_batches(ten, 10)] == [10]
    assert [b.size for b in make_batches(ten, 50)] == [10]
    with pytest.raises(DomainError):
        make_batches(ten, 0)


def test_batch_composition_seeded(small):
    _, ex = small
    ten = [e for e in (ex * 4)[:10]]
    a = [[id(x) for x in b.examples] for b in make_batches(ten, 3, np.random.default_rng(5))]
    b = [[id(x) for x in b.examples] for b in make_batches(ten, 3, np.random.default_rng(5))]
    assert a == b


def test_batch_padding_layout(small):
    _, ex = small
    batch = Batch.from_examples(ex[:2])
    assert batch.mask.tolist() == [[True] * 7, [True, True] + [False] * 5]
    assert batch.gather[1, 2:].tolist() == [len(batch.word_features)] * 5
    assert len(batch.word_features) == 7  # "play" and "queen" are shared


def test_padding_invariance(small):
    tagger, ex = small
    short = ex[1]
    alone = tagger.losses(Batch.from_examples([short])).data[0]
    with_partner = tagger.losses(Batch.from_examples([short, ex[0]])).data[0]
    assert alone.tobytes() == with_partner.tobytes()
    long_words = tagger.example(("supercalifragilistic", "x", "queen", "y", "z", "w", "v", "u"))
    long_words = type(long_words)(long_words.tokens, long_words.features, (0,) * 8)
    padded = tagger.losses(Batch.from_examples([short, long_words])).data[0]
    assert alone.tobytes() == padded.tobytes()


def test_forward_utterance(small):
    tagger, _ = small
    tokens = ("play", "unseen", "queen")
    e = forward_utterance(tagger, tokens)
    assert e.shape == (3, len(tagger.tags))
    assert np.array_equal(e.data, forward_utterance(tagger, tokens).data)
    assert np.array_equal(e.data, tagger.emissions(tokens))
    noisy = forward_utterance(tagger, tokens, True, np.random.default_rng(0), 0.5)
    assert not np.array_equal(noisy.data, e.data)


def test_emission_gradients(small):
    tagger, _ = small
    w = np.random.default_rng(1).normal(size=(2, len(tagger.tags)))

    loss = lambda: T.tensor_sum(T.mul(forward_utterance(tagger, ("play", "queen")), Tensor(w)))
    params = [p for n, p in tagger.named_parameters().items() if not n.startswith(("char.", "byte."))]
    assert check_gradients(loss, params) < 1e-4


def test_end_to_end_gradient(toy_corpus, toy_lexicon, tiny_config):
    tagger = build_tagger(tiny_config, toy_corpus, toy_lexicon, np.random.default_rng(2))
    batch = Batch.from_examples(examples_for(tagger, list(toy_corpus)[1:]))
    params = tagger.named_parameters()
    assert any(n.startswith("phoneme.") for n in params) and "word.embed" in params
    err = check_gradients(lambda: mean(tagger.losses(batch)), list(params.values()))
    assert err < 1e-4


def test_parameter_delta_equals_word_table(toy_corpus, toy_lexicon, tiny_config):
    rng = np.random.default_rng
    sub = build_tagger(tiny_config.replace(use_word_embeddings=False), toy_corpus, toy_lexicon, rng(0))
    comb = build_tagger(tiny_config, toy_corpus, toy_lexicon, rng(0))
    table = comb.named_parameters()["word.embed"]
    assert table.shape == (len(comb.featurizer.word_vocab), tiny_config.word_embed_dim)
    sub_params = sub.named_parameters()
    shared = {k: v.size for k, v in comb.named_parameters().items() if k in sub_params and not k.startswith("sentence.")}
    assert shared == {k: v.size for k, v in sub_params.items() if not k.startswith("sentence.")}


def test_one_epoch(toy_corpus, toy_lexicon, tiny_config):
    result = train(tiny_config.replace(max_epochs=1), toy_corpus, toy_corpus, toy_lexicon)
    assert len(result.log) == 1 and result.best.epoch == 1


def test_determinism_and_best_checkpoint(toy_corpus, toy_lexicon, tiny_config):
    cfg = tiny_config.replace(max_epochs=4, dropout_rate=0.5)
    a = train(cfg, toy_corpus, toy_corpus, toy_lexicon)
    b = train(cfg, toy_corpus, toy_corpus, toy_lexicon)
    assert [r.line() for r in a.log] == [r.line() for r in b.log]
    assert all(a.best.params[k].tobytes() == b.best.params[k].tobytes() for k in a.best.params)
    assert a.best.dev_f1 == max(r.dev.f1 for r in a.log)
    first = next(r.epoch for r in a.log if r.dev.f1 == a.best.dev_f1)
    assert a.best.epoch == first
    snap = a.tagger.snapshot()
    assert all(np.array_equal(snap[k], a.best.params[k]) for k in snap)


def test_ties_keep_earlier_epoch(toy_corpus, toy_lexicon, tiny_config):
    # an all-O dev set scores F1 = 0 every epoch, so epoch 1 must be kept
    dev = Corpus([TaggedUtterance(("play",), ("O",))])
    result = train(tiny_config.replace(max_epochs=3), toy_corpus, dev, toy_lexicon)
    assert [r.dev.f1 for r in result.log] == [0.0] * 3
    assert result.best.epoch == 1


def test_epoch_log_line(toy_corpus, toy_lexicon, tiny_config):
    result = train(tiny_config.replace(max_epochs=1), toy_corpus, toy_corpus, toy_lexicon)
    fields = result.log[0].line().split("\t")
    assert len(fields) == 5 and fields[0] == "1"
    float(fields[1])


def test_divergence_reported(toy_corpus, toy_lexicon, tiny_config):
    # an infinite pre-trained vector turns the first loss touching "queen" into NaN
    with pytest.raises(TrainingDivergedError) as info, np.errstate(invalid="ignore", over="ignore"):
        train(tiny_config, toy_corpus, toy_corpus, toy_lexicon, word_vectors={"queen": np.full(3, np.inf)})
    assert info.value.epoch == 1 and info.value.batch >= 1
    assert "epoch 1" in str(info.value)


def test_vocabularies_from_train_only(toy_corpus, toy_lexicon, tiny_config):
    dev = Corpus([TaggedUtterance(("zzz",), ("B-song",))])
    result = train(tiny_config.replace(max_epochs=1), toy_corpus, dev, toy_lexicon)
    assert "zzz" not in result.tagger.featurizer.word_vocab
    assert "z" not in result.tagger.featurizer.char_vocab


def test_learns_small_corpus():
    lang = SyntheticLanguage(seed=3)
    corpus = lang.corpus(12)
    cfg = TrainConfig(subword_embed_dim=8, subword_hidden_dim=8, word_hidden_dim=16,
                      max_epochs=30, learning_rate=0.01, dropout_rate=0.0)
    result = train(cfg, corpus, corpus, compile_lexicon(lang.lexicon_entries()))
    assert result.log[-1].train_loss < result.log[0].train_loss
    assert result.best.dev_f1 > 80
