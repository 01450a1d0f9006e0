"""Conditional next-rule policy service: trains a recurrent model on rule
sequences with leading-power conditions and serves masked next-rule
distributions over newline-delimited JSON."""

__version__ = "0.1.0"

from .data import Sequence, read_corpus
from .model import ArtifactError, ModelConfig, NextRuleModel, load_artifact, save_artifact
from .server import PolicyServer, PolicyService, start_background
from .training import TrainConfig, train
from .vocab import N_RULES, RULE_TABLE, valid_mask, vocab_hash

__all__ = [name for name in dir() if not name.startswith("_")]
