"""Versioned model container: a text header followed by raw float64 parameter blocks.

Layout::

    subword-ner-model
    version 1
    header <n>
    <n bytes of UTF-8 JSON: config, vocabularies, lexicon, parameter manifest>
    params <m>
    <m bytes: every parameter, little-endian float64, manifest order>
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..crf import TagSet
from ..errors import ModelFormatError, ShapeMismatchError, TruncatedModelError, UnknownVersionError
from ..featurize import Featurizer, PhonemeLexicon, Vocab
from ..model import Tagger
from ..training import TrainConfig

MAGIC = b"subword-ner-model"
FORMAT_VERSION = 1
_DTYPE = np.dtype("<f8")


@dataclass
class ModelArtifact:
    tagger: Tagger
    config: TrainConfig
    format_version: int = FORMAT_VERSION


def _header(tagger: Tagger, config: TrainConfig) -> dict:
    f = tagger.featurizer
    cfg = asdict(config)
    cfg["units"] = list(config.units)
    return {
        "config": cfg,
        "char_vocab": list(f.char_vocab.symbols),
        "phoneme_vocab": list(f.lexicon.vocab.symbols),
        "word_vocab": list(f.word_vocab.symbols),
        "tags": list(tagger.tags.labels),
        "lexicon": {w: list(seq) for w, seq in sorted(f.lexicon.entries.items())},
        "params": [{"name": n, "shape": list(t.shape)} for n, t in tagger.named_parameters().items()],
    }


def save_model(path, tagger: Tagger, config: TrainConfig) -> None:
    header = json.dumps(_header(tagger, config), ensure_ascii=False, sort_keys=True).encode("utf-8")
    blob = b"".join(np.ascontiguousarray(t.data, dtype=_DTYPE).tobytes() for t in tagger.named_parameters().values())
    with open(path, "wb") as fh:
        fh.write(MAGIC + b"\n")
        fh.write(f"version {FORMAT_VERSION}\n".encode())
        fh.write(f"header {len(header)}\n".encode())
        fh.write(header)
        fh.write(f"\nparams {len(blob)}\n".encode())
        fh.write(blob)


def _line(data: bytes, pos: int, path) -> tuple[str, int]:
    end = data.find(b"\n", pos)
    if end < 0:
        raise TruncatedModelError("file ends inside the header", path)
    return data[pos:end].decode("ascii", errors="replace"), end + 1


def _count(line: str, key: str, path) -> int:
    parts = line.split()
    if len(parts) != 2 or parts[0] != key or not parts[1].isdigit():
        raise ModelFormatError(f"expected '{key} <n>', found {line!r}", path)
    return int(parts[1])


def load_model(path) -> ModelArtifact:
    """Read a container written by :func:`save_model`; nothing is returned unless every check passes."""
    path = Path(path)
    data = path.read_bytes()
    magic, pos = _line(data, 0, path)
    if magic.encode() != MAGIC:
        raise ModelFormatError("not a subword-ner model file", path)
    version_line, pos = _line(data, pos, path)
    version = _count(version_line, "version", path)
    if version != FORMAT_VERSION:
        raise UnknownVersionError(f"format version {version} is not supported (expected {FORMAT_VERSION})", path)
    header_line, pos = _line(data, pos, path)
    n_header = _count(header_line, "header", path)
    if pos + n_header > len(data):
        raise TruncatedModelError("file ends inside the header", path)
    try:
        header = json.loads(data[pos : pos + n_header].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"unreadable header: {exc}", path) from None
    pos += n_header
    if data[pos : pos + 1] != b"\n":
        raise TruncatedModelError("file ends inside the header", path)
    params_line, pos = _line(data, pos + 1, path)
    n_params = _count(params_line, "params", path)

    manifest = header["params"]
    declared = sum(int(np.prod(p["shape"], dtype=np.int64)) for p in manifest) * _DTYPE.itemsize
    if declared != n_params:
        raise ShapeMismatchError(f"parameter manifest needs {declared} bytes, block declares {n_params}", path)
    available = len(data) - pos
    if available < n_params:
        raise TruncatedModelError(f"parameter block has {available} of {n_params} bytes", path)
    if available > n_params:
        raise ModelFormatError(f"{available - n_params} unexpected trailing bytes", path)

    cfg = dict(header["config"])
    cfg["units"] = tuple(cfg["units"])
    config = TrainConfig(**cfg)
    phoneme_vocab = Vocab.from_symbols(header["phoneme_vocab"])
    lexicon = PhonemeLexicon({w: tuple(seq) for w, seq in header["lexicon"].items()}, phoneme_vocab)
    featurizer = Featurizer(
        char_vocab=Vocab.from_symbols(header["char_vocab"]),
        lexicon=lexicon,
        word_vocab=Vocab.from_symbols(header["word_vocab"]),
    )
    tags = TagSet.from_labels(header["tags"])
    if list(tags.labels) != header["tags"]:
        raise ModelFormatError("tag list is not in canonical order", path)

    tagger = Tagger.initialize(config.model_config(), featurizer, tags, np.random.default_rng(0))
    expected = {n: t.shape for n, t in tagger.named_parameters().items()}
    arrays: dict[str, np.ndarray] = {}
    offset = pos
    for entry in manifest:
        name, shape = entry["name"], tuple(entry["shape"])
        if name not in expected:
            raise ShapeMismatchError(f"unexpected parameter {name!r}", path)
        if shape != expected[name]:
            raise ShapeMismatchError(f"{name}: declared shape {shape}, configuration implies {expected[name]}", path)
        n = int(np.prod(shape, dtype=np.int64)) * _DTYPE.itemsize
        arrays[name] = np.frombuffer(data, dtype=_DTYPE, count=n // _DTYPE.itemsize, offset=offset).reshape(shape).astype(np.float64)
        offset += n
    missing = set(expected) - set(arrays)
    if missing:
        raise ShapeMismatchError(f"missing parameters {sorted(missing)}", path)
    tagger.load_arrays(arrays)
    return ModelArtifact(tagger, config, version)
