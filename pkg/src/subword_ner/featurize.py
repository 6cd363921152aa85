"""Characters, marked phonemes and UTF-8 bytes for each word."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import DomainError, LexiconError

PAD = "<pad>"
UNK = "<unk>"
PAD_ID = 0
UNK_ID = 1

BYTE_VOCAB_SIZE = 257
BYTE_PAD_ID = 256

UNITS = ("char", "phoneme", "byte")


class Vocab:
    """Frozen symbol table with PAD at id 0 and UNK at id 1."""

    def __init__(self, symbols: Iterable[str]):
        ordered = [PAD, UNK]
        seen = set(ordered)
        for s in symbols:
            if s in seen:
                raise DomainError(f"duplicate vocabulary symbol {s!r}")
            seen.add(s)
            ordered.append(s)
        self._symbols = tuple(ordered)
        self._index = {s: i for i, s in enumerate(ordered)}

    @classmethod
    def from_symbols(cls, symbols: Sequence[str]) -> "Vocab":
        """Rebuild from the full id-ordered symbol list (as serialized)."""
        if tuple(symbols[:2]) != (PAD, UNK):
            raise DomainError("serialized vocabulary must start with PAD and UNK")
        return cls(symbols[2:])

    @property
    def symbols(self) -> tuple[str, ...]:
        return self._symbols

    def id_of(self, symbol: str) -> int:
        return self._index.get(symbol, UNK_ID)

    def __contains__(self, symbol: str) -> bool:
        return symbol in self._index and self._index[symbol] > UNK_ID

    def __len__(self) -> int:
        return len(self._symbols)

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocab) and self._symbols == other._symbols

    def __repr__(self) -> str:
        return f"Vocab(size={len(self)})"


CharVocab = Vocab


def build_char_vocab(words: Iterable[str]) -> Vocab:
    """Distinct code points of the training words, sorted by scalar value."""
    chars: set[str] = set()
    n = 0
    for w in words:
        chars.update(w)
        n += 1
    if n == 0:
        raise DomainError("cannot build a character vocabulary from an empty corpus")
    return Vocab(sorted(chars, key=ord))


def build_word_vocab(words: Iterable[str]) -> Vocab:
    types = set(words)
    if not types:
        raise DomainError("cannot build a word vocabulary from an empty corpus")
    return Vocab(sorted(types))


def chars_of(word: str, vocab: Vocab) -> list[int]:
    if not word:
        raise DomainError("empty word")
    return [vocab.id_of(ch) for ch in word]


def bytes_of(word: str) -> list[int]:
    """UTF-8 bytes of ``word``; each byte value is its own id."""
    if not word:
        raise DomainError("empty word")
    return list(word.encode("utf-8"))


# --- phoneme lexicon --------------------------------------------------------


def mark_pronunciation(phonemes: Sequence[str]) -> tuple[str, ...]:
    """Attach word-boundary markers: ``_B`` first, ``_E`` last, ``_BE`` if both."""
    if not phonemes:
        raise LexiconError("empty pronunciation")
    if len(phonemes) == 1:
        return (phonemes[0] + "_BE",)
    return (phonemes[0] + "_B", *phonemes[1:-1], phonemes[-1] + "_E")


@dataclass(frozen=True)
class PhonemeLexicon:
    entries: Mapping[str, tuple[str, ...]]
    vocab: Vocab

    def lookup(self, word: str) -> tuple[str, ...] | None:
        return self.entries.get(word.lower())

    def __len__(self) -> int:
        return len(self.entries)


def compile_lexicon(raw: Iterable[tuple[str, Sequence[str]]] | Mapping[str, Sequence[str]]) -> PhonemeLexicon:
    """Mark every pronunciation and build the phoneme vocabulary.

    Words are lowercased. A repeated word must repeat its pronunciation.
    """
    items = raw.items() if isinstance(raw, Mapping) else raw
    plain: dict[str, tuple[str, ...]] = {}
    for word, phonemes in items:
        key = word.lower()
        phonemes = tuple(phonemes)
        if not phonemes:
            raise LexiconError(f"empty pronunciation for {word!r}")
        if key in plain and plain[key] != phonemes:
            raise LexiconError(f"conflicting pronunciations for {word!r}")
        plain[key] = phonemes
    entries = {w: mark_pronunciation(p) for w, p in plain.items()}
    tokens = sorted({tok for seq in entries.values() for tok in seq})
    return PhonemeLexicon(entries=entries, vocab=Vocab(tokens))


def read_lexicon(path) -> list[tuple[str, list[str]]]:
    """Raw entries from a ``word<TAB>ph ph ...`` file; ``#`` lines are comments."""
    entries = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            if "\t" not in line:
                raise LexiconError("expected word<TAB>phonemes", path, lineno)
            word, pron = line.split("\t", 1)
            phonemes = pron.split()
            if not word or not phonemes:
                raise LexiconError("empty word or pronunciation", path, lineno)
            entries.append((word, phonemes))
    return entries


def write_lexicon(path, raw: Iterable[tuple[str, Sequence[str]]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for word, phonemes in raw:
            fh.write(f"{word}\t{' '.join(phonemes)}\n")


def load_lexicon(path) -> PhonemeLexicon:
    try:
        return compile_lexicon(read_lexicon(path))
    except LexiconError as exc:
        if exc.path is None:
            raise LexiconError(str(exc), Path(path)) from exc
        raise


def phonemes_of(word: str, lexicon: PhonemeLexicon) -> list[int]:
    marked = lexicon.lookup(word)
    if marked is None:
        return [UNK_ID]
    return [lexicon.vocab.id_of(tok) for tok in marked]


def empty_lexicon() -> PhonemeLexicon:
    return PhonemeLexicon(entries={}, vocab=Vocab([]))


# --- per-word features ------------------------------------------------------


@dataclass(frozen=True)
class WordFeatures:
    char_ids: tuple[int, ...]
    phoneme_ids: tuple[int, ...]
    byte_ids: tuple[int, ...]
    word_id: int | None = None

    def ids(self, unit: str) -> tuple[int, ...]:
        if unit == "char":
            return self.char_ids
        if unit == "phoneme":
            return self.phoneme_ids
        if unit == "byte":
            return self.byte_ids
        raise DomainError(f"unknown subword unit {unit!r}")


@dataclass(frozen=True)
class Featurizer:
    """All frozen vocabularies needed to featurize a token."""

    char_vocab: Vocab
    lexicon: PhonemeLexicon
    word_vocab: Vocab

    @classmethod
    def from_training_words(cls, words: Sequence[str], lexicon: PhonemeLexicon | None = None) -> "Featurizer":
        return cls(
            char_vocab=build_char_vocab(words),
            lexicon=lexicon if lexicon is not None else empty_lexicon(),
            word_vocab=build_word_vocab(words),
        )

    def features(self, word: str) -> WordFeatures:
        return WordFeatures(
            char_ids=tuple(chars_of(word, self.char_vocab)),
            phoneme_ids=tuple(phonemes_of(word, self.lexicon)),
            byte_ids=tuple(bytes_of(word)),
            word_id=self.word_vocab.id_of(word),
        )

    def vocab_size(self, unit: str) -> int:
        if unit == "char":
            return len(self.char_vocab)
        if unit == "phoneme":
            return len(self.lexicon.vocab)
        if unit == "byte":
            return BYTE_VOCAB_SIZE
        if unit == "word":
            return len(self.word_vocab)
        raise DomainError(f"unknown unit {unit!r}")

    def pad_id(self, unit: str) -> int:
        return BYTE_PAD_ID if unit == "byte" else PAD_ID
