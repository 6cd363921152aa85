"""Vocabulary sizes and parameter counts, subword-only versus word-level."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..crf import TagSet
from ..featurize import BYTE_VOCAB_SIZE, Featurizer
from ..model import ModelConfig, Tagger


@dataclass(frozen=True)
class VocabReport:
    char: int
    phoneme: int
    byte: int
    word: int
    params_subwords_only: int
    params_word_level: int
    params_combined: int
    word_embedding_delta: int

    @property
    def subword_total(self) -> int:
        return self.char + self.phoneme + self.byte

    def format(self) -> str:
        rows = [
            ("char_vocab", self.char),
            ("phoneme_vocab", self.phoneme),
            ("byte_vocab", self.byte),
            ("subword_vocab_total", self.subword_total),
            ("word_vocab", self.word),
            ("params_subwords_only", self.params_subwords_only),
            ("params_word_level", self.params_word_level),
            ("params_combined", self.params_combined),
            ("word_embedding_params", self.word_embedding_delta),
        ]
        return "".join(f"{k}\t{v}\n" for k, v in rows)


def _count(config: ModelConfig, featurizer: Featurizer, tags: TagSet) -> int:
    return Tagger.initialize(config, featurizer, tags, np.random.default_rng(0)).parameter_count()


def vocab_report(featurizer: Featurizer, tags: TagSet, base: ModelConfig | None = None) -> VocabReport:
    """Sizes of every frozen vocabulary and trainable-parameter totals per configuration.

    ``word_embedding_delta`` is the size of the word embedding table alone,
    ``|word vocab| * word_embed_dim``.
    """
    base = base or ModelConfig()
    units = base.units or ("char", "phoneme", "byte")
    dims = dict(
        subword_embed_dim=base.subword_embed_dim,
        subword_hidden_dim=base.subword_hidden_dim,
        word_embed_dim=base.word_embed_dim,
        word_hidden_dim=base.word_hidden_dim,
    )
    return VocabReport(
        char=len(featurizer.char_vocab),
        phoneme=len(featurizer.lexicon.vocab),
        byte=BYTE_VOCAB_SIZE,
        word=len(featurizer.word_vocab),
        params_subwords_only=_count(ModelConfig(units=units, use_word_embeddings=False, **dims), featurizer, tags),
        params_word_level=_count(ModelConfig(units=(), use_word_embeddings=True, **dims), featurizer, tags),
        params_combined=_count(ModelConfig(units=units, use_word_embeddings=True, **dims), featurizer, tags),
        word_embedding_delta=len(featurizer.word_vocab) * base.word_embed_dim,
    )
