"""Offline dataset preparation for the composed-query retrieval engine."""

from .prep import PrepConfig, encode_corpus, prepare_queries

__version__ = "0.1.0"
