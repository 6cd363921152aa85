"""The full tagger: subword encoders, word-level BiLSTM and CRF head."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import crf
from .crf import CRFParams, TagSet
from .encoders import LSTMCellParams, SubwordEncoders, canonical_units, embed_words, run_lstm
from .errors import DomainError, ShapeError
from .featurize import UNITS, Featurizer, WordFeatures
from .numeric.functional import dropout
from .numeric.tensor import Tensor, concat, no_grad, stack, take_rows


@dataclass(frozen=True)
class ModelConfig:
    units: tuple[str, ...] = UNITS
    use_word_embeddings: bool = False
    subword_embed_dim: int = 35
    subword_hidden_dim: int = 35
    word_embed_dim: int = 64
    word_hidden_dim: int = 128

    def __post_init__(self):
        object.__setattr__(self, "units", canonical_units(self.units))
        if not self.units and not self.use_word_embeddings:
            raise DomainError("enable at least one subword unit or word embeddings")
        dims = (self.subword_embed_dim, self.subword_hidden_dim, self.word_embed_dim, self.word_hidden_dim)
        if any(d < 1 for d in dims):
            raise DomainError("all dimensions must be positive")

    @property
    def embedding_width(self) -> int:
        width = 2 * self.subword_hidden_dim * len(self.units)
        return width + (self.word_embed_dim if self.use_word_embeddings else 0)


@dataclass(frozen=True)
class Example:
    tokens: tuple[str, ...]
    features: tuple[WordFeatures, ...]
    tag_ids: tuple[int, ...] | None = None


@dataclass
class Batch:
    """Padded group of utterances.

    Word features are stored once per distinct token; ``gather[b, t]`` is the
    row of position ``t`` of utterance ``b`` in that list, or ``n_words``
    (a zero row) at padding.
    """

    examples: list[Example]
    word_features: list[WordFeatures]
    gather: np.ndarray
    mask: np.ndarray
    tags: np.ndarray

    @classmethod
    def from_examples(cls, examples: Sequence[Example]) -> "Batch":
        if not examples:
            raise DomainError("empty batch")
        examples = list(examples)
        T = max(len(e.tokens) for e in examples)
        rows: dict[str, int] = {}
        words: list[WordFeatures] = []
        for e in examples:
            for tok, f in zip(e.tokens, e.features):
                if tok not in rows:
                    rows[tok] = len(words)
                    words.append(f)
        gather = np.full((len(examples), T), len(words), dtype=np.intp)
        mask = np.zeros((len(examples), T), dtype=bool)
        tags = np.zeros((len(examples), T), dtype=np.intp)
        for b, e in enumerate(examples):
            n = len(e.tokens)
            gather[b, :n] = [rows[tok] for tok in e.tokens]
            mask[b, :n] = True
            if e.tag_ids is not None:
                tags[b, :n] = e.tag_ids
        return cls(examples, words, gather, mask, tags)

    @property
    def size(self) -> int:
        return len(self.examples)

    @property
    def lengths(self) -> np.ndarray:
        return self.mask.sum(axis=1)


class Tagger:
    """Holds vocabularies, tag set and every trainable parameter."""

    def __init__(
        self,
        config: ModelConfig,
        featurizer: Featurizer,
        tags: TagSet,
        encoders: SubwordEncoders,
        word_fwd: LSTMCellParams,
        word_bwd: LSTMCellParams,
        head: CRFParams,
    ):
        self.config = config
        self.featurizer = featurizer
        self.tags = tags
        self.encoders = encoders
        self.word_fwd = word_fwd
        self.word_bwd = word_bwd
        self.head = head

    @classmethod
    def initialize(cls, config: ModelConfig, featurizer: Featurizer, tags: TagSet, rng: np.random.Generator) -> "Tagger":
        units = config.units
        sizes = {u: featurizer.vocab_size(u) for u in (*units, "word")}
        pads = {u: featurizer.pad_id(u) for u in units}
        encoders = SubwordEncoders.init(
            units,
            sizes,
            pads,
            rng,
            embed_dim=config.subword_embed_dim,
            hidden_dim=config.subword_hidden_dim,
            word_embed_dim=config.word_embed_dim if config.use_word_embeddings else None,
        )
        width = config.embedding_width
        word_fwd = LSTMCellParams.init(width, config.word_hidden_dim, rng)
        word_bwd = LSTMCellParams.init(width, config.word_hidden_dim, rng)
        head = CRFParams.init(len(tags), 2 * config.word_hidden_dim, rng)
        return cls(config, featurizer, tags, encoders, word_fwd, word_bwd, head)

    # --- parameters -------------------------------------------------------

    def named_parameters(self) -> dict[str, Tensor]:
        out = dict(self.encoders.named())
        out.update(self.word_fwd.named("sentence.fwd"))
        out.update(self.word_bwd.named("sentence.bwd"))
        out.update(self.head.named())
        return out

    def parameter_count(self) -> int:
        return sum(t.size for t in self.named_parameters().values())

    def snapshot(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self.named_parameters().items()}

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        params = self.named_parameters()
        if set(arrays) != set(params):
            missing = sorted(set(params) - set(arrays))
            extra = sorted(set(arrays) - set(params))
            raise ShapeError(f"parameter names differ (missing {missing}, unexpected {extra})")
        for name, t in params.items():
            if arrays[name].shape != t.shape:
                raise ShapeError(f"{name}: shape {arrays[name].shape}, expected {t.shape}")
            t.data = np.array(arrays[name], dtype=np.float64)

    # --- featurization ----------------------------------------------------

    def example(self, tokens: Sequence[str], labels: Sequence[str] | None = None) -> Example:
        tokens = tuple(tokens)
        if not tokens:
            raise DomainError("empty utterance")
        feats = tuple(self.featurizer.features(tok) for tok in tokens)
        tag_ids = None if labels is None else tuple(self.tags.id_of(label) for label in labels)
        return Example(tokens, feats, tag_ids)

    # --- forward ----------------------------------------------------------

    def emission_steps(
        self,
        batch: Batch,
        training: bool = False,
        dropout_rate: float = 0.0,
        rng: np.random.Generator | None = None,
    ) -> list[Tensor]:
        """(B, K) emission scores for every position of a padded batch."""
        words = embed_words(batch.word_features, self.encoders)
        width = words.shape[1]
        if width != self.word_fwd.input_dim:
            raise ShapeError(f"embedding width {width} != sentence LSTM input {self.word_fwd.input_dim}")
        padded = concat([words, Tensor(np.zeros((1, width)))], axis=0)
        T = batch.gather.shape[1]
        xs = [dropout(take_rows(padded, batch.gather[:, t]), dropout_rate, training, rng) for t in range(T)]
        masks = [batch.mask[:, t : t + 1] for t in range(T)]
        forward = run_lstm(xs, self.word_fwd, masks)
        backward = run_lstm(xs, self.word_bwd, masks, reverse=True)
        return [self.head.emit(concat([forward[t], backward[t]], axis=1)) for t in range(T)]

    def losses(
        self,
        batch: Batch,
        training: bool = False,
        dropout_rate: float = 0.0,
        rng: np.random.Generator | None = None,
    ) -> Tensor:
        """Per-utterance CRF negative log-likelihood, shape (B,)."""
        steps = self.emission_steps(batch, training, dropout_rate, rng)
        return crf.batch_nll(steps, self.head.transitions, batch.tags, batch.mask)

    def emissions(self, tokens: Sequence[str]) -> np.ndarray:
        """T x K emission matrix for one utterance (inference mode)."""
        with no_grad():
            steps = self.emission_steps(Batch.from_examples([self.example(tokens)]))
        return np.concatenate([s.data for s in steps], axis=0)

    def predict(self, utterances: Sequence[Sequence[str]], batch_size: int = 64) -> list[list[str]]:
        """Viterbi label sequences, dropout off."""
        out: list[list[str]] = []
        utterances = list(utterances)
        trans = self.head.transitions.data
        with no_grad():
            for start in range(0, len(utterances), batch_size):
                batch = Batch.from_examples([self.example(u) for u in utterances[start : start + batch_size]])
                scores = np.stack([s.data for s in self.emission_steps(batch)], axis=1)
                for b, n in enumerate(batch.lengths):
                    path, _ = crf.viterbi_decode(scores[b, :n], trans)
                    out.append([self.tags.label(i) for i in path])
        return out


def forward_utterance(
    tagger: Tagger,
    tokens: Sequence[str],
    training: bool = False,
    rng: np.random.Generator | None = None,
    dropout_rate: float = 0.0,
) -> Tensor:
    """Differentiable T x K emissions for a single utterance."""
    steps = tagger.emission_steps(Batch.from_examples([tagger.example(tokens)]), training, dropout_rate, rng)
    return concat(steps, axis=0)
