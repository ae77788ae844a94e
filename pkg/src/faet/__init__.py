"""faet: fine-grained attention over emoji and text.

A desk-scale binary sentiment classifier for short emoji-bearing texts,
built on an in-package reverse-mode autodiff core: two context-dependent
sense vectors per emoji mixed by attention, a BiLSTM over the joint
text+emoji sequence, word-level cross-attention between text and emoji
hidden states, a small convolutional head, and a cross-entropy objective
augmented with an attention-alignment term.
"""

__version__ = "0.1.0"

from . import attention, autograd, classifier, corpus, embedding, encoder
from . import objective, synthetic
from .autograd import Value, finite_difference_check, no_grad
from .checkpoint import load_checkpoint, save_checkpoint
from .corpus import TokenizedDoc, Vocab, build_vocab, split_corpus
from .model import Model, TrainConfig
from .optim import Adam
from .trainer import MetricsReport, ablate, evaluate, train

__all__ = [
    "Adam", "MetricsReport", "Model", "TokenizedDoc", "TrainConfig", "Value",
    "Vocab", "ablate", "attention", "autograd", "build_vocab", "classifier",
    "corpus", "embedding", "encoder", "evaluate", "finite_difference_check",
    "load_checkpoint", "no_grad", "objective", "save_checkpoint",
    "split_corpus", "synthetic", "train",
]
