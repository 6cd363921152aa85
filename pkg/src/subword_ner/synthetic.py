"""Synthetic voice-assistant style corpora with pseudo-words and a matching lexicon.

Entity types are signalled by word-internal suffixes (``-son`` for artists,
``-burg`` for cities, ...), while the carrier phrases around an entity slot
are shared across types, so a tagger has to look inside words to recover
the type of a word it has never seen.
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus_io.corpus import Corpus, TaggedUtterance, write_corpus
from .featurize import write_lexicon

ONSETS = {
    "b": ["b"], "d": ["d"], "k": ["k"], "m": ["m"], "n": ["n"], "p": ["p"], "r": ["r\\"],
    "s": ["s"], "t": ["t"], "l": ["l"], "v": ["v"], "z": ["z"], "g": ["g"], "f": ["f"],
    "h": ["h"], "sh": ["S"], "ch": ["tS"], "j": ["dZ"], "w": ["w"], "y": ["j"],
}
NUCLEI = {
    "a": ["A"], "e": ["E"], "i": ["I"], "o": ["O"], "u": ["U"], "ee": ["i:"], "oo": ["u:"],
    "ai": ["aI"], "ou": ["aU"], "ö": ["2:"], "é": ["e:"], "ü": ["y:"],
}
NUCLEUS_WEIGHTS = {"ö": 0.15, "é": 0.15, "ü": 0.15}
CODAS = {"": [], "n": ["n"], "r": ["r\\"], "k": ["k"], "m": ["m"], "l": ["l"], "s": ["s"], "t": ["t"]}

SUFFIXES = {
    "artist": {"son": ["s", "@", "n"], "ski": ["s", "k", "i:"]},
    "city": {"burg": ["b", "3:", "g"], "ville": ["v", "I", "l"]},
    "song": {"ella": ["E", "l", "@"], "ina": ["i:", "n", "@"]},
}

FUNCTION_WORDS = {
    "play": ["p", "l", "eI"], "please": ["p", "l", "i:", "z"], "tell": ["t", "E", "l"],
    "me": ["m", "i:"], "about": ["@", "b", "aU", "t"], "find": ["f", "aI", "n", "d"],
    "now": ["n", "aU"], "i": ["aI"], "like": ["l", "aI", "k"], "what": ["w", "A", "t"],
    "and": ["{", "n", "d"], "some": ["s", "V", "m"], "search": ["s", "3:", "tS"],
    "for": ["f", "O:", "r\\"], "show": ["S", "@U"], "is": ["I", "z"], "on": ["A", "n"],
    "the": ["D", "@"], "go": ["g", "@U"], "to": ["t", "u:"],
}

# Carrier phrases; ``{}`` marks an entity slot that accepts any type.
TEMPLATES = (
    "play {}",
    "{} please",
    "tell me about {}",
    "find {} now",
    "i like {}",
    "what about {} and {}",
    "search for {}",
    "show me {} please",
    "what is on {}",
    "go to {} and play {}",
    "{}",
    "play some {} now",
)


@dataclass
class PseudoWord:
    surface: str
    phonemes: list[str]


@dataclass
class SyntheticLanguage:
    """Deterministic generator of pseudo-words, utterances and a partial lexicon.

    Every generated word gets a pronunciation; only a ``lexicon_coverage``
    fraction of entity words (decided once per word) is written to the
    lexicon. Function words are always covered.
    """

    seed: int = 0
    lexicon_coverage: float = 0.9
    max_entity_tokens: int = 2
    rng: np.random.Generator = field(init=False, repr=False)
    pronunciations: dict[str, list[str]] = field(init=False, default_factory=dict)
    covered: set[str] = field(init=False, default_factory=set)

    def __post_init__(self):
        self.rng = np.random.default_rng(self.seed)
        self._onsets = list(ONSETS)
        self._nuclei = list(NUCLEI)
        weights = np.array([NUCLEUS_WEIGHTS.get(n, 1.0) for n in self._nuclei])
        self._nucleus_p = weights / weights.sum()
        self._codas = list(CODAS)
        for w, ph in FUNCTION_WORDS.items():
            self.pronunciations[w] = list(ph)
            self.covered.add(w)

    def _syllable(self) -> tuple[str, list[str]]:
        onset = self._onsets[self.rng.integers(len(self._onsets))]
        nucleus = self._nuclei[self.rng.choice(len(self._nuclei), p=self._nucleus_p)]
        coda = self._codas[self.rng.integers(len(self._codas))]
        return onset + nucleus + coda, ONSETS[onset] + NUCLEI[nucleus] + CODAS[coda]

    def entity_word(self, etype: str, exclude: set[str] | frozenset = frozenset()) -> PseudoWord:
        """A word of type ``etype``: one or two stem syllables plus a type suffix."""
        while True:
            surface, phonemes = "", []
            for _ in range(1 + self.rng.integers(2)):
                s, p = self._syllable()
                surface += s
                phonemes += p
            suffixes = list(SUFFIXES[etype])
            suffix = suffixes[self.rng.integers(len(suffixes))]
            surface += suffix
            phonemes += SUFFIXES[etype][suffix]
            if surface in FUNCTION_WORDS or surface in exclude:
                continue
            if surface in self.pronunciations and self.pronunciations[surface] != phonemes:
                continue
            break
        if surface not in self.pronunciations:
            self.pronunciations[surface] = phonemes
            if self.rng.random() < self.lexicon_coverage:
                self.covered.add(surface)
        return PseudoWord(surface, phonemes)

    def entity(self, etype: str, pool: Sequence[str] | None = None) -> list[str]:
        n = 1 + self.rng.integers(self.max_entity_tokens)
        if pool:
            return [pool[self.rng.integers(len(pool))] for _ in range(n)]
        return [self.entity_word(etype).surface for _ in range(n)]

    def utterance(self, pools: dict[str, Sequence[str]] | None = None) -> TaggedUtterance:
        template = TEMPLATES[self.rng.integers(len(TEMPLATES))]
        types = sorted(SUFFIXES)
        tokens: list[str] = []
        labels: list[str] = []
        for piece in template.split():
            if piece != "{}":
                tokens.append(piece)
                labels.append("O")
                continue
            etype = types[self.rng.integers(len(types))]
            words = self.entity(etype, None if pools is None else pools.get(etype))
            tokens += words
            labels += [f"B-{etype}"] + [f"I-{etype}"] * (len(words) - 1)
        return TaggedUtterance(tuple(tokens), tuple(labels))

    def corpus(self, n: int, split: str = "train", pools: dict[str, Sequence[str]] | None = None) -> Corpus:
        return Corpus([self.utterance(pools) for _ in range(n)], split)

    def lexicon_entries(self) -> list[tuple[str, list[str]]]:
        return [(w, self.pronunciations[w]) for w in sorted(self.covered)]


@dataclass
class OOVSplit:
    train: Corpus
    test: Corpus
    oov_positions: list[tuple[int, int]]
    lexicon: list[tuple[str, list[str]]]

    @property
    def oov_utterances(self) -> int:
        return len({u for u, _ in self.oov_positions})


def make_oov_split(
    n_train: int = 200, n_test: int = 100, oov_fraction: float = 0.1, seed: int = 0, lexicon_coverage: float = 0.9
) -> OOVSplit:
    """Train/test pair where exactly ``round(oov_fraction * test tokens)`` test tokens are unseen.

    Test entities are first drawn from the training entity words; then the
    chosen number of entity positions are replaced by fresh words of the
    same type, each distinct and absent from the training corpus.
    """
    lang = SyntheticLanguage(seed=seed, lexicon_coverage=lexicon_coverage)
    train = lang.corpus(n_train, "train")
    train_words = set(train.words())
    pools: dict[str, list[str]] = {t: [] for t in SUFFIXES}
    for u in train:
        for tok, lab in zip(u.tokens, u.labels):
            if lab != "O" and tok not in pools[lab[2:]]:
                pools[lab[2:]].append(tok)
    test_utts = [lang.utterance(pools) for _ in range(n_test)]
    n_tokens = sum(len(u) for u in test_utts)
    n_oov = int(round(oov_fraction * n_tokens))
    entity_positions = [
        (i, j) for i, u in enumerate(test_utts) for j, lab in enumerate(u.labels) if lab != "O"
    ]
    if n_oov > len(entity_positions):
        raise ValueError("not enough entity tokens to place the requested OOV words")
    picks = lang.rng.choice(len(entity_positions), size=n_oov, replace=False)
    chosen = sorted(entity_positions[k] for k in picks)
    used = set(train_words)
    tokens = [list(u.tokens) for u in test_utts]
    for i, j in chosen:
        etype = test_utts[i].labels[j][2:]
        fresh = lang.entity_word(etype, exclude=used).surface
        used.add(fresh)
        tokens[i][j] = fresh
    test = Corpus([TaggedUtterance(tuple(t), u.labels) for t, u in zip(tokens, test_utts)], "test")
    return OOVSplit(train, test, chosen, lang.lexicon_entries())


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Write a synthetic train/dev/test corpus and lexicon.")
    parser.add_argument("--out", required=True, type=Path, help="output directory")
    parser.add_argument("--train", type=int, default=400)
    parser.add_argument("--dev", type=int, default=100)
    parser.add_argument("--test", type=int, default=100)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--coverage", type=float, default=0.9, help="lexicon coverage of entity words")
    args = parser.parse_args(argv)
    lang = SyntheticLanguage(seed=args.seed, lexicon_coverage=args.coverage)
    args.out.mkdir(parents=True, exist_ok=True)
    for split, n in (("train", args.train), ("dev", args.dev), ("test", args.test)):
        write_corpus(args.out / f"{split}.tsv", lang.corpus(n, split))
    write_lexicon(args.out / "lexicon.tsv", lang.lexicon_entries())
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
