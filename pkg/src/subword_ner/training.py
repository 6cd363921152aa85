"""Mini-batch Adam training with per-epoch dev evaluation and best-F1 selection."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, fields
from typing import Callable, Mapping, Sequence

import numpy as np

from .corpus_io.corpus import Corpus, TaggedUtterance
from .crf import TagSet
from .errors import DomainError, TrainingDivergedError
from .evaluation import PRF, per_token_prf
from .featurize import UNITS, Featurizer, PhonemeLexicon
from .model import Batch, Example, ModelConfig, Tagger, forward_utterance
from .numeric.optim import AdamState, adam_step
from .numeric.tensor import gradients, mean

log = logging.getLogger(__name__)

# Utterances per batch used for each language's training set size.
LANGUAGE_BATCH_SIZES = {"en": 1024, "de": 256, "fr": 4, "es": 4}


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.0007
    batch_size: int = 4
    max_epochs: int = 40
    dropout_rate: float = 0.5
    units: tuple[str, ...] = UNITS
    use_word_embeddings: bool = False
    seed: int = 1
    subword_embed_dim: int = 35
    word_embed_dim: int = 64
    subword_hidden_dim: int = 35
    word_hidden_dim: int = 128

    def __post_init__(self):
        if self.batch_size < 1:
            raise DomainError("batch_size must be at least 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise DomainError("dropout_rate must lie in [0, 1)")
        if self.max_epochs < 1:
            raise DomainError("max_epochs must be at least 1")
        if not self.learning_rate > 0:
            raise DomainError("learning_rate must be positive")
        self.model_config()

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            units=tuple(self.units),
            use_word_embeddings=self.use_word_embeddings,
            subword_embed_dim=self.subword_embed_dim,
            subword_hidden_dim=self.subword_hidden_dim,
            word_embed_dim=self.word_embed_dim,
            word_hidden_dim=self.word_hidden_dim,
        )

    def replace(self, **changes) -> "TrainConfig":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return TrainConfig(**values)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    dev: PRF

    def line(self) -> str:
        return f"{self.epoch}\t{self.train_loss:.6f}\t{self.dev.precision:.2f}\t{self.dev.recall:.2f}\t{self.dev.f1:.2f}"


@dataclass
class Checkpoint:
    params: dict[str, np.ndarray]
    epoch: int
    dev_f1: float


@dataclass
class TrainResult:
    tagger: Tagger
    best: Checkpoint
    log: list[EpochRecord] = field(default_factory=list)


def make_batches(examples: Sequence[Example], batch_size: int, rng: np.random.Generator | None = None) -> list[Batch]:
    """Shuffle (when ``rng`` is given) and cut into padded batches of at most ``batch_size``."""
    if batch_size < 1:
        raise DomainError("batch_size must be at least 1")
    order = np.arange(len(examples))
    if rng is not None:
        order = rng.permutation(len(examples))
    return [
        Batch.from_examples([examples[i] for i in order[start : start + batch_size]])
        for start in range(0, len(examples), batch_size)
    ]


def build_tagger(
    config: TrainConfig,
    train_corpus: Corpus | Sequence[TaggedUtterance],
    lexicon: PhonemeLexicon | None,
    rng: np.random.Generator,
    word_vectors: Mapping[str, np.ndarray] | None = None,
) -> Tagger:
    """Vocabularies from the training split only, then fresh parameters."""
    utterances = list(train_corpus)
    words = [tok for u in utterances for tok in u.tokens]
    featurizer = Featurizer.from_training_words(words, lexicon)
    tags = TagSet.from_labels(label for u in utterances for label in u.labels)
    tagger = Tagger.initialize(config.model_config(), featurizer, tags, rng)
    if word_vectors and tagger.encoders.word_table is not None:
        from .corpus_io.vectors import apply_word_vectors

        apply_word_vectors(tagger.encoders.word_table, featurizer.word_vocab, word_vectors)
    return tagger


def evaluate(tagger: Tagger, corpus: Sequence[TaggedUtterance]) -> PRF:
    corpus = list(corpus)
    return per_token_prf(tagger.predict([u.tokens for u in corpus]), corpus)


def train(
    config: TrainConfig,
    train_corpus: Corpus | Sequence[TaggedUtterance],
    dev_corpus: Corpus | Sequence[TaggedUtterance],
    lexicon: PhonemeLexicon | None = None,
    word_vectors: Mapping[str, np.ndarray] | None = None,
    on_epoch: Callable[[EpochRecord], None] | None = None,
) -> TrainResult:
    """Train for exactly ``config.max_epochs`` epochs and keep the best dev-F1 parameters.

    Ties in dev F1 keep the earlier epoch. The returned tagger carries the
    best parameters.
    """
    rng = np.random.default_rng(config.seed)
    train_utts = list(train_corpus)
    dev_utts = list(dev_corpus)
    if not train_utts:
        raise DomainError("empty training corpus")
    tagger = build_tagger(config, train_utts, lexicon, rng, word_vectors)
    examples = [tagger.example(u.tokens, u.labels) for u in train_utts]
    params = tagger.named_parameters()
    names = list(params)
    state = AdamState(lr=config.learning_rate)

    best: Checkpoint | None = None
    history: list[EpochRecord] = []
    for epoch in range(1, config.max_epochs + 1):
        total, n_batches = 0.0, 0
        for b, batch in enumerate(make_batches(examples, config.batch_size, rng), 1):
            loss = mean(tagger.losses(batch, training=True, dropout_rate=config.dropout_rate, rng=rng))
            value = loss.item()
            if not math.isfinite(value):
                raise TrainingDivergedError(epoch, b, value)
            grads = gradients(loss, params.values())
            new, state = adam_step(
                {n: params[n].data for n in names}, dict(zip(names, grads)), state
            )
            for n in names:
                params[n].data = new[n]
                params[n].grad = None
            total += value
            n_batches += 1
        dev = evaluate(tagger, dev_utts) if dev_utts else PRF()
        record = EpochRecord(epoch, total / n_batches, dev)
        history.append(record)
        log.info("epoch %d loss %.4f dev f1 %.2f", epoch, record.train_loss, dev.f1)
        if on_epoch is not None:
            on_epoch(record)
        if best is None or dev.f1 > best.dev_f1:
            best = Checkpoint(tagger.snapshot(), epoch, dev.f1)

    tagger.load_arrays(best.params)
    return TrainResult(tagger, best, history)


def format_epoch_log(records: Sequence[EpochRecord]) -> str:
    return "".join(r.line() + "\n" for r in records)


__all__ = [
    "Checkpoint",
    "EpochRecord",
    "LANGUAGE_BATCH_SIZES",
    "TrainConfig",
    "TrainResult",
    "build_tagger",
    "evaluate",
    "format_epoch_log",
    "forward_utterance",
    "make_batches",
    "train",
]
