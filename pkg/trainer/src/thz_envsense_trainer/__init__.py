"""Conditional-GAN map-completion trainer for thz-envsense corpora."""

from .data import Corpus, CorpusFormatError, load_corpus
from .infer import infer
from .losses import critic_loss, generator_loss, gradient_penalty, interpolate, loss_mse
from .models import Critic, Generator
from .train import TrainConfig, TrainingDiverged, load_generator, train

__version__ = "0.1.0"
