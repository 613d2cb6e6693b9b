"""Trainable graph-based dependency parsing for basic (tree) and enhanced
(graph) Universal Dependencies."""

from .conllu import Sentence, Token, read_conllu, write_conllu
from .evaluate import evaluate
from .model import ModelConfig, ParserModel
from .trainer import TrainConfig, train

__all__ = [
    "Sentence", "Token", "read_conllu", "write_conllu",
    "evaluate", "ModelConfig", "ParserModel", "TrainConfig", "train",
]

__version__ = "0.1.0"
