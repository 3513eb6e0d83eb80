"""Numerical core: embedding file IO, normalized bag-of-words documents, and
exact Word Mover's Distance over a balanced-transport solve."""

from .embeddings import EmbeddingTable, load_embeddings, save_embeddings
from .nbow import NBowDoc, default_stopwords, load_stopwords, to_nbow, tokenize
from .solver import TransportProblem, kernel_name, solve_transport
from .wmd import DiversityReport, WmdResult, diversity_report, rwmd, wcd, wmd

__all__ = [
    "EmbeddingTable",
    "load_embeddings",
    "save_embeddings",
    "NBowDoc",
    "default_stopwords",
    "load_stopwords",
    "to_nbow",
    "tokenize",
    "TransportProblem",
    "kernel_name",
    "solve_transport",
    "WmdResult",
    "DiversityReport",
    "wmd",
    "wcd",
    "rwmd",
    "diversity_report",
]
