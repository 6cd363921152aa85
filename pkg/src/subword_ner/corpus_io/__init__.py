"""Corpora, lexica, word vectors, configuration files and model containers."""

from .corpus import Corpus, TaggedUtterance, bio2_problem, format_corpus, read_corpus, write_corpus

__all__ = ["Corpus", "TaggedUtterance", "bio2_problem", "format_corpus", "read_corpus", "write_corpus"]
