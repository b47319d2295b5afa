"""Tiny character-level causal LM served over the stdio JSON adapter protocol."""

from .model import CharTransformer, TinyModelConfig, load_checkpoint, save_checkpoint
from .train import train_model

__version__ = "0.1.0"

__all__ = ["CharTransformer", "TinyModelConfig", "load_checkpoint",
           "save_checkpoint", "train_model"]
