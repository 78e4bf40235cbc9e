"""Trainable entailment verifier service.

Trains a small from-scratch sequence-pair classifier on premise/hypothesis
triples with a focal-loss objective and serves verdicts over the
``/v1/nli`` wire protocol.
"""

from .loss import focal_loss_value, focal_loss_tensor
from .model import EncoderClassifier, Vocabulary, load_checkpoint, save_checkpoint
from .train import TrainConfig, train

__version__ = "0.1.0"
