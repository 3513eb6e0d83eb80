"""word2vec embedding file IO.

Text format: header line ``vocab_size dim``, then one ``word v1 ... vdim``
line per entry. Binary format: the same ASCII header terminated by a
newline, then per entry the word bytes terminated by a single space followed
by dim little-endian IEEE-754 float32 values, entries optionally separated
by a newline. Vectors are stored as float32, the binary format's native
width, so binary round trips are bit-exact.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DimensionMismatch, FormatError, MissingFile

log = logging.getLogger(__name__)

TEXT = "text"
BINARY = "binary"


@dataclass
class EmbeddingTable:
    dim: int
    vectors: dict[str, np.ndarray] = field(default_factory=dict)

    def __contains__(self, word: str) -> bool:
        return word in self.vectors

    def __getitem__(self, word: str) -> np.ndarray:
        return self.vectors[word]

    def __len__(self) -> int:
        return len(self.vectors)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingTable):
            return NotImplemented
        return (
            self.dim == other.dim
            and list(self.vectors) == list(other.vectors)
            and all(np.array_equal(v, other.vectors[w]) for w, v in self.vectors.items())
        )

    def add(self, word: str, vector: np.ndarray) -> None:
        # whitespace would corrupt both file formats (space/newline delimit)
        if not word or any(c.isspace() for c in word):
            raise ValueError(f"word must be non-empty and whitespace-free, got {word!r}")
        vector = np.asarray(vector, dtype=np.float32)
        if vector.shape != (self.dim,):
            raise DimensionMismatch(word, self.dim, int(vector.size))
        if word in self.vectors:
            log.warning("duplicate word %r: keeping first occurrence", word)
            return
        self.vectors[word] = vector


def load_embeddings(path: str | Path, format: str = TEXT) -> EmbeddingTable:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(str(path))
    if format == TEXT:
        return _load_text(path)
    if format == BINARY:
        return _load_binary(path)
    raise ValueError(f"format must be {TEXT!r} or {BINARY!r}, got {format!r}")


def save_embeddings(table: EmbeddingTable, path: str | Path, format: str = TEXT) -> None:
    path = Path(path)
    if format == TEXT:
        _save_text(table, path)
    elif format == BINARY:
        _save_binary(table, path)
    else:
        raise ValueError(f"format must be {TEXT!r} or {BINARY!r}, got {format!r}")


def _parse_header(line: bytes, offset: int) -> tuple[int, int]:
    parts = line.decode("utf-8", errors="replace").split()
    if len(parts) != 2:
        raise FormatError(offset, f"header must be 'vocab_size dim', got {line!r}")
    try:
        vocab, dim = int(parts[0]), int(parts[1])
    except ValueError:
        raise FormatError(offset, f"non-integer header {line!r}") from None
    if vocab < 0 or dim < 1:
        raise FormatError(offset, f"bad header values vocab={vocab} dim={dim}")
    return vocab, dim


def _load_text(path: Path) -> EmbeddingTable:
    offset = 0
    with path.open("rb") as fh:
        header = fh.readline()
        vocab, dim = _parse_header(header.strip(), offset)
        offset += len(header)
        table = EmbeddingTable(dim=dim)
        parsed = 0
        for raw in fh:
            line_offset = offset
            offset += len(raw)
            line = raw.decode("utf-8").rstrip("\n")
            if not line.strip():
                continue
            if parsed >= vocab:
                raise FormatError(line_offset, f"more than {vocab} entries")
            parts = line.split(" ")
            word, values = parts[0], parts[1:]
            if len(values) != dim:
                raise DimensionMismatch(word, dim, len(values))
            try:
                vec = np.array([float(v) for v in values], dtype=np.float32)
            except ValueError:
                raise FormatError(line_offset, f"non-numeric component for word {word!r}") from None
            table.add(word, vec)
            parsed += 1
    if parsed != vocab:
        raise FormatError(offset, f"header promised {vocab} entries, found {parsed}")
    return table


def _save_text(table: EmbeddingTable, path: Path) -> None:
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{len(table)} {table.dim}\n")
        for word, vec in table.vectors.items():
            # repr of the float64 promotion round-trips the float32 exactly
            fh.write(word + " " + " ".join(repr(float(v)) for v in vec) + "\n")


def _load_binary(path: Path) -> EmbeddingTable:
    data = path.read_bytes()
    newline = data.find(b"\n")
    if newline == -1:
        raise FormatError(0, "missing header line")
    vocab, dim = _parse_header(data[:newline], 0)
    table = EmbeddingTable(dim=dim)
    pos = newline + 1
    vec_bytes = 4 * dim
    for _ in range(vocab):
        while pos < len(data) and data[pos : pos + 1] == b"\n":
            pos += 1
        space = data.find(b" ", pos)
        if space == -1:
            raise FormatError(pos, "unterminated word (no trailing space)")
        try:
            word = data[pos:space].decode("utf-8")
        except UnicodeDecodeError:
            raise FormatError(pos, "word is not valid UTF-8") from None
        pos = space + 1
        if pos + vec_bytes > len(data):
            raise FormatError(pos, f"truncated vector for word {word!r}")
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=pos).copy()
        pos += vec_bytes
        table.add(word, vec)
    while pos < len(data) and data[pos : pos + 1] == b"\n":
        pos += 1
    if pos != len(data):
        raise FormatError(pos, "trailing bytes after last entry")
    return table


def _save_binary(table: EmbeddingTable, path: Path) -> None:
    with path.open("wb") as fh:
        fh.write(f"{len(table)} {table.dim}\n".encode("utf-8"))
        for word, vec in table.vectors.items():
            fh.write(word.encode("utf-8") + b" ")
            fh.write(np.asarray(vec, dtype="<f4").tobytes())
            fh.write(b"\n")
