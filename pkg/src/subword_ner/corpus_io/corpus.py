"""CoNLL-style corpora: ``token<TAB>label`` lines, blank line between utterances."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from ..errors import CorpusFormatError

_LABEL = re.compile(r"^(O|[BI]-\S+)$")


@dataclass(frozen=True)
class TaggedUtterance:
    tokens: tuple[str, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.tokens) != len(self.labels):
            raise CorpusFormatError(f"{len(self.tokens)} tokens but {len(self.labels)} labels")
        if not self.tokens:
            raise CorpusFormatError("empty utterance")

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass
class Corpus:
    utterances: list[TaggedUtterance]
    split: str = "train"

    def __len__(self) -> int:
        return len(self.utterances)

    def __iter__(self) -> Iterator[TaggedUtterance]:
        return iter(self.utterances)

    def __getitem__(self, i):
        return self.utterances[i]

    def words(self) -> Iterator[str]:
        for u in self.utterances:
            yield from u.tokens

    def labels(self) -> Iterator[str]:
        for u in self.utterances:
            yield from u.labels

    def entity_types(self) -> set[str]:
        return {label[2:] for label in self.labels() if label != "O"}


def bio2_problem(labels: Iterable[str]) -> str | None:
    """Why ``labels`` is not a valid BIO2 sequence, or ``None`` if it is."""
    previous = "O"
    for i, label in enumerate(labels):
        if not _LABEL.match(label):
            return f"label {label!r} is not O, B-TYPE or I-TYPE"
        if label.startswith("I-") and previous[2:] != label[2:]:
            return f"{label} at position {i} does not continue an entity of that type"
        previous = label
    return None


def read_corpus(path, split: str = "train", strict: bool = True) -> Corpus:
    """Parse a corpus file, lowercasing tokens.

    With ``strict`` every utterance must be valid BIO2; otherwise only the
    form of each label is checked (useful for model predictions, which may
    contain an ``I-X`` after ``O``).
    """
    path = Path(path)
    utterances: list[TaggedUtterance] = []
    tokens: list[str] = []
    labels: list[str] = []
    start = 0

    def flush():
        if not tokens:
            return
        if strict:
            problem = bio2_problem(labels)
            if problem:
                raise CorpusFormatError(problem, path, start)
        utterances.append(TaggedUtterance(tuple(tokens), tuple(labels)))
        tokens.clear()
        labels.clear()

    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line.strip():
                flush()
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise CorpusFormatError("expected token<TAB>label", path, lineno)
            token, label = parts[0].strip().lower(), parts[1].strip()
            if not token or not _LABEL.match(label):
                raise CorpusFormatError(f"bad token or label {label!r}", path, lineno)
            if not tokens:
                start = lineno
            tokens.append(token)
            labels.append(label)
        flush()
    if not utterances:
        raise CorpusFormatError("corpus is empty", path)
    return Corpus(utterances, split)


def write_corpus(path, corpus: Corpus | Iterable[TaggedUtterance]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_corpus(corpus))


def format_corpus(corpus: Corpus | Iterable[TaggedUtterance]) -> str:
    blocks = []
    for u in corpus:
        blocks.append("".join(f"{tok}\t{lab}\n" for tok, lab in zip(u.tokens, u.labels)))
    return "\n".join(blocks)
