"""Cross-lingual named entity tagger: char-CNN + BiLSTM + transition decoder."""

from .corpus import Corpus, Sentence, TagScheme, evaluate_f1, parse_conll
from .model import Hyperparams, Model, SharingConfig, build_model
from .training import TrainReport, run_training, train

__all__ = ["Corpus", "Sentence", "TagScheme", "evaluate_f1", "parse_conll", "Hyperparams",
           "Model", "SharingConfig", "build_model", "TrainReport", "run_training", "train"]
