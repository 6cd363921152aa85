"""BiLSTM-CRF named-entity tagger built from character, phoneme and byte subword units."""

from .crf import TagSet
from .featurize import Featurizer, PhonemeLexicon, compile_lexicon, load_lexicon
from .model import ModelConfig, Tagger
from .training import TrainConfig, TrainResult, train

__version__ = "0.1.0"

__all__ = [
    "Featurizer",
    "ModelConfig",
    "PhonemeLexicon",
    "TagSet",
    "Tagger",
    "TrainConfig",
    "TrainResult",
    "compile_lexicon",
    "load_lexicon",
    "train",
]
