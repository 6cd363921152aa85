"""Pre-trained word vectors in ``word v1 ... v_dim`` text format."""

from __future__ import annotations

import warnings

import numpy as np

from ..errors import DataFormatError
from ..featurize import Vocab
from ..numeric.tensor import Tensor


def read_word_vectors(path, dim: int) -> dict[str, np.ndarray]:
    """Vectors keyed by lowercased word. A repeated word keeps its last vector."""
    vectors: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != dim + 1:
                raise DataFormatError(f"expected {dim} values, found {len(parts) - 1}", path, lineno)
            try:
                values = np.array([float(v) for v in parts[1:]])
            except ValueError:
                raise DataFormatError("non-numeric vector component", path, lineno) from None
            word = parts[0].lower()
            if word in vectors:
                warnings.warn(f"{path}:{lineno}: duplicate vector for {word!r}; keeping the last one", stacklevel=2)
            vectors[word] = values
    return vectors


def apply_word_vectors(table: Tensor, vocab: Vocab, vectors: dict[str, np.ndarray]) -> int:
    """Overwrite the rows of in-vocabulary words; returns how many rows changed."""
    replaced = 0
    for word, vec in vectors.items():
        if word not in vocab:
            continue
        if vec.shape != (table.shape[1],):
            raise DataFormatError(f"vector for {word!r} has dimension {vec.shape[0]}, table expects {table.shape[1]}")
        table.data[vocab.id_of(word)] = vec
        replaced += 1
    return replaced
