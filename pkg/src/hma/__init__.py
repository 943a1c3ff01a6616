"""Hybrid multi-aspect attention reader for two-choice reading comprehension."""

from .config import Config
from .data import Instance, Vocab, load_corpus, preprocess
from .model import HMAModel

__version__ = "0.1.0"
