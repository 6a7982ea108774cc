"""Exact dynamic-programming decoding and global training for arc-hybrid and
arc-eager dependency parsers over {s0, b0} bi-LSTM features."""

from .chart import (
    DecodeResult, ScoreTables, decode, decode_cost_augmented, decode_eager, decode_hybrid,
    sequence_score,
)
from .corpus import (
    Evaluation, ParseTree, Sentence, Token, Vocabulary, evaluate, is_projective, load_conll,
    read_conll, write_conll,
)
from .graph import eisner_decode, lemma1_reduction, lemma2_reduction
from .neural import FeatureSet, ModelConfig, ScoreModel
from .parser import Parser
from .transition import (
    Configuration, SystemKind, Transition, apply, dynamic_oracle_cost, initial, is_terminal,
    legal, sequence_to_tree, static_oracle,
)

__version__ = "0.1.0"
