import numpy as np
import pytest

from subword_ner.corpus_io.corpus import Corpus, TaggedUtterance
from subword_ner.featurize import compile_lexicon
from subword_ner.training import TrainConfig

ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def record(name: str, passed: bool, detail: str = "") -> None:
    ACCEPTANCE_RESULTS.append((name, passed, detail))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def toy_corpus():
    utts = [
        (("play", "we", "are", "the", "champions", "by", "queen"),
         ("O", "B-song", "I-song", "I-song", "I-song", "O", "B-artist")),
        (("play", "queen"), ("O", "B-artist")),
        (("weather", "in", "berlin"), ("O", "O", "B-city")),
    ]
    return Corpus([TaggedUtterance(t, l) for t, l in utts], "train")


@pytest.fixture
def toy_lexicon():
    return compile_lexicon({
        "play": ["p", "l", "eI"], "queen": ["k", "w", "i:", "n"], "we": ["w", "i:"],
        "are": ["A:"], "the": ["D", "@"], "by": ["b", "aI"],
    })


@pytest.fixture
def tiny_config():
    return TrainConfig(
        subword_embed_dim=3, subword_hidden_dim=4, word_embed_dim=3, word_hidden_dim=4,
        dropout_rate=0.0, max_epochs=2, batch_size=2, use_word_embeddings=True,
    )


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")
