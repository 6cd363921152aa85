"""Acceptance criteria, each checked at its stated tolerance.

Every test records one PASS/FAIL line, printed at the end of the run.
"""

import time

import numpy as np
import pytest

from conftest import record
from oracles import brute_best, brute_log_partition, lstm_step_scalar
from subword_ner.corpus_io.corpus import Corpus, TaggedUtterance
from subword_ner.corpus_io.model_file import load_model, save_model
from subword_ner.corpus_io.vocab_report import vocab_report
from subword_ner.crf import TagSet, init_transitions, log_partition, score_sequence, viterbi_decode
from subword_ner.encoders import LSTMCellParams, LSTMState, lstm_cell_step
from subword_ner.evaluation import oov_report
from subword_ner.experiments import COMBINED, SUBWORDS, WORD, ablation_grid, run_ablation
from subword_ner.featurize import Featurizer, compile_lexicon
from subword_ner.model import Batch
from subword_ner.numeric import Tensor, check_gradients
from subword_ner.numeric.tensor import mean
from subword_ner.synthetic import SyntheticLanguage, make_oov_split
from subword_ner.training import TrainConfig, build_tagger, evaluate, train


def test_crf_exactness():
    name = "1 crf exactness (200 instances, 1e-8, viterbi exact, <10 s)"
    gen = np.random.default_rng(2024)
    start = time.perf_counter()
    worst, viterbi_ok = 0.0, True
    for _ in range(200):
        T, K = int(gen.integers(1, 6)), int(gen.integers(1, 5))
        e = gen.normal(scale=2.0, size=(T, K))
        trans = init_transitions(K, gen)
        trans[:K, :K] = gen.normal(size=(K, K))
        trans[K, :K] = gen.normal(size=K)
        trans[:K, K + 1] = gen.normal(size=K)
        worst = max(worst, abs(log_partition(e, trans) - brute_log_partition(e.tolist(), trans.tolist())))
        path, score = viterbi_decode(e, trans)
        viterbi_ok &= score == brute_best(e.tolist(), trans.tolist()) == score_sequence(e, path, trans)
    elapsed = time.perf_counter() - start
    passed = worst < 1e-8 and viterbi_ok and elapsed < 10
    record(name, passed, f"max|dZ|={worst:.2e} viterbi_exact={viterbi_ok} time={elapsed:.1f}s")
    assert passed


def test_gradient_correctness():
    name = "2 end-to-end gradient (all units + word emb, hidden 4, K=3, 2 utts, <1e-4, <60 s)"
    corpus = Corpus([
        TaggedUtterance(("play", "schön", "now"), ("O", "B-song", "O")),
        TaggedUtterance(("dark", "ella"), ("B-song", "I-song")),
    ])
    lexicon = compile_lexicon({"play": ["p", "l", "eI"], "dark": ["d", "A", "r\\", "k"], "now": ["n", "aU"]})
    cfg = TrainConfig(subword_embed_dim=3, subword_hidden_dim=4, word_embed_dim=3, word_hidden_dim=4,
                      use_word_embeddings=True, dropout_rate=0.0)
    tagger = build_tagger(cfg, corpus, lexicon, np.random.default_rng(7))
    assert len(tagger.tags) == 3 and tagger.config.units == ("char", "phoneme", "byte")
    batch = Batch.from_examples([tagger.example(u.tokens, u.labels) for u in corpus])
    params = tagger.named_parameters()
    start = time.perf_counter()
    err = check_gradients(lambda: mean(tagger.losses(batch)), list(params.values()), eps=1e-5)
    elapsed = time.perf_counter() - start
    passed = err < 1e-4 and elapsed < 60
    record(name, passed, f"max_rel_err={err:.2e} params={len(params)} time={elapsed:.1f}s")
    assert passed


def test_lstm_variant_fidelity():
    name = "3 lstm vs scalar oracle (100 configs, <1e-12; zero params -> h=0)"
    gen = np.random.default_rng(99)
    worst = 0.0
    for _ in range(100):
        d, h = int(gen.integers(1, 8)), int(gen.integers(1, 8))
        p = LSTMCellParams.init(d, h, gen)
        for n in p.NAMES:
            getattr(p, n).data = gen.normal(size=getattr(p, n).shape)
        x, hp, cp = gen.normal(size=d), gen.uniform(-1, 1, h), gen.normal(size=h)
        s = lstm_cell_step(x, LSTMState(Tensor(hp), Tensor(cp)), p)
        oh, oc = lstm_step_scalar(x.tolist(), hp.tolist(), cp.tolist(), {n: getattr(p, n).data.tolist() for n in p.NAMES})
        worst = max(worst, float(np.max(np.abs(s.h.data - oh))), float(np.max(np.abs(s.c.data - oc))))
    zero = LSTMCellParams.init(4, 5, gen)
    for n in zero.NAMES:
        getattr(zero, n).data = np.zeros(getattr(zero, n).shape)
    h0 = lstm_cell_step(gen.normal(size=4), LSTMState.zeros(5), zero).h.data
    passed = worst < 1e-12 and np.all(h0 == 0.0)
    record(name, passed, f"max_abs_err={worst:.1e} zero_h_exact={bool(np.all(h0 == 0.0))}")
    assert passed


class _Reached(Exception):
    pass


def test_overfit_sanity():
    name = "4 overfit 50 utts, subwords only, lr 0.0007, dropout 0.5 (>=99 F1 within 200 epochs, <10 min)"
    lang = SyntheticLanguage(seed=1)
    corpus = lang.corpus(50)
    assert len(corpus.entity_types()) == 3
    lexicon = compile_lexicon(lang.lexicon_entries())
    cfg = TrainConfig(max_epochs=200, units=("char", "phoneme", "byte"), use_word_embeddings=False)
    assert (cfg.learning_rate, cfg.dropout_rate) == (0.0007, 0.5)
    seen = []

    def stop_when_reached(rec):
        seen.append(rec.dev.f1)
        if rec.dev.f1 >= 99.0:
            raise _Reached

    start = time.perf_counter()
    # the dev set is the training set, so dev F1 is the train per-token F1
    with pytest.raises(_Reached):
        try:
            train(cfg, corpus, corpus, lexicon, on_epoch=stop_when_reached)
        finally:
            elapsed = time.perf_counter() - start
            passed = bool(seen) and seen[-1] >= 99.0 and elapsed < 600
            record(name, passed, f"train_f1={max(seen, default=0):.2f} at epoch {len(seen)} time={elapsed:.1f}s")
    assert passed


def test_vocabulary_size_trend():
    name = "5 vocab trend (5000 utts, >=3000 word types, subword vocab <600, delta = |V|*64)"
    lang = SyntheticLanguage(seed=0)
    corpus = lang.corpus(5000)
    lexicon = compile_lexicon(lang.lexicon_entries())
    feat = Featurizer.from_training_words(list(corpus.words()), lexicon)
    report = vocab_report(feat, TagSet.from_labels(corpus.labels()))
    delta = report.params_combined - report.params_subwords_only
    sentence_growth = 3 * 128 * 64 * 2  # input weights of w_xi, w_xc, w_xo, both directions
    passed = (
        report.word >= 3000
        and report.subword_total < 600
        and report.word_embedding_delta == report.word * 64
        and delta == report.word * 64 + sentence_growth
    )
    record(name, passed, f"subword={report.subword_total} (char {report.char}, phoneme {report.phoneme}, byte 257) "
                         f"word={report.word} delta={report.word_embedding_delta}")
    assert passed


def test_ablation_trend():
    name = "6 ablation trend (3 seeds, slack 0.5 F1)"
    lang = SyntheticLanguage(seed=11)
    train_corpus, dev = lang.corpus(100, "train"), lang.corpus(100, "dev")
    lexicon = compile_lexicon(lang.lexicon_entries())
    grid = [s for s in ablation_grid()
            if (s.regime == SUBWORDS and len(s.units) in (1, 3)) or (s.regime == COMBINED and len(s.units) == 3)
            or s.regime == WORD]
    rows = run_ablation(TrainConfig(max_epochs=10), train_corpus, dev, lexicon, n_seeds=3, settings=grid)
    f1 = {(r.setting.regime, r.setting.name): r.dev_f1 for r in rows}
    three = f1[(SUBWORDS, "char+phoneme+byte")]
    singles = {u: f1[(SUBWORDS, u)] for u in ("char", "phoneme", "byte")}
    combined, word = f1[(COMBINED, "char+phoneme+byte")], f1[(WORD, "-")]
    passed = all(three >= s - 0.5 for s in singles.values()) and combined >= word - 0.5
    detail = " ".join(f"{u}={v:.2f}" for u, v in singles.items())
    record(name, passed, f"all3={three:.2f} {detail} word+all3={combined:.2f} word={word:.2f}")
    assert passed


def test_oov_behavior():
    name = "7 oov split (10% unseen; counts exact; subword F1 on OOV > 0)"
    split = make_oov_split(n_train=150, n_test=100, oov_fraction=0.1, seed=5)
    n_tokens = sum(len(u) for u in split.test)
    lexicon = compile_lexicon(split.lexicon)
    results = {}
    for label, cfg in (("subwords", TrainConfig(max_epochs=10)),
                       ("word", TrainConfig(max_epochs=10, units=(), use_word_embeddings=True))):
        tagger = train(cfg, split.train, split.train, lexicon).tagger
        predictions = tagger.predict([u.tokens for u in split.test])
        results[label] = oov_report(split.test, predictions, tagger.featurizer.word_vocab)
    sub, word = results["subwords"], results["word"]
    counts_ok = all(
        r.oov_token_count == len(split.oov_positions) == round(0.1 * n_tokens)
        and r.utterances_with_oov == split.oov_utterances
        for r in results.values()
    )
    passed = counts_ok and sub.prf_on_oov_tokens.f1 > 0
    record(name, passed,
           f"oov_tokens={sub.oov_token_count}/{n_tokens} utts={sub.utterances_with_oov} "
           f"subword_oov_f1={sub.prf_on_oov_tokens.f1:.2f} word_only_oov_f1={word.prf_on_oov_tokens.f1:.2f} "
           f"(utterance slice {sub.prf_on_oov_utterances.f1:.2f} vs {word.prf_on_oov_utterances.f1:.2f})")
    assert passed


def test_determinism(tmp_path):
    name = "8 determinism (bit-identical checkpoints; save/load keeps 100/100 decisions)"
    lang = SyntheticLanguage(seed=8)
    train_corpus, dev, test = lang.corpus(40), lang.corpus(20), lang.corpus(100)
    lexicon = compile_lexicon(lang.lexicon_entries())
    cfg = TrainConfig(max_epochs=3, use_word_embeddings=True, seed=42)
    a, b = train(cfg, train_corpus, dev, lexicon), train(cfg, train_corpus, dev, lexicon)
    identical = a.best.epoch == b.best.epoch and all(
        a.best.params[k].tobytes() == b.best.params[k].tobytes() for k in a.best.params)
    path = tmp_path / "model.bin"
    save_model(path, a.tagger, cfg)
    restored = load_model(path).tagger
    utts = [u.tokens for u in test]
    before, after = a.tagger.predict(utts), restored.predict(utts)
    same = sum(x == y for x, y in zip(before, after))
    passed = identical and same == 100 and len(utts) == 100
    record(name, passed, f"checkpoints_identical={identical} decisions_kept={same}/100 "
                         f"test_f1={evaluate(restored, test).f1:.2f}")
    assert passed
