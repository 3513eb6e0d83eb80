"""Tokenization and normalized bag-of-words construction.

Tokens are lower-cased maximal alphanumeric runs. Stopwords and
out-of-vocabulary tokens are dropped; remaining counts are normalized to
weights summing to one. Word order in the document follows first occurrence,
which keeps downstream solves deterministic.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from ..errors import EmptyDocument, MissingFile
from .embeddings import EmbeddingTable

# alphanumeric runs; \w minus underscore keeps unicode letters working
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def default_stopwords() -> frozenset[str]:
    data = resources.files("bidforge.data").joinpath("stopwords_en.txt").read_text("utf-8")
    return frozenset(w.strip() for w in data.splitlines() if w.strip() and not w.startswith("#"))


def load_stopwords(path: str | Path) -> frozenset[str]:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(str(path))
    words = path.read_text("utf-8").splitlines()
    return frozenset(w.strip().lower() for w in words if w.strip() and not w.startswith("#"))


@dataclass(frozen=True)
class NBowDoc:
    """Distinct in-vocabulary words with strictly positive weights summing
    to one, vectors aligned by index."""

    words: tuple[str, ...]
    weights: np.ndarray  # float64, shape (k,)
    vectors: np.ndarray  # float64, shape (k, dim)

    def __len__(self) -> int:
        return len(self.words)


def to_nbow(
    text: str, table: EmbeddingTable, stopwords: frozenset[str] = frozenset()
) -> NBowDoc:
    counts: dict[str, int] = {}
    for token in tokenize(text):
        if token in stopwords or token not in table:
            continue
        counts[token] = counts.get(token, 0) + 1
    if not counts:
        raise EmptyDocument(f"no usable tokens in {text[:60]!r}")
    words = tuple(counts)
    total = sum(counts.values())
    weights = np.array([counts[w] / total for w in words], dtype=np.float64)
    vectors = np.array([table[w] for w in words], dtype=np.float64)
    return NBowDoc(words=words, weights=weights, vectors=vectors)
