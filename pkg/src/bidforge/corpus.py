"""AskNature-style innovation corpus: loading, validation, splits, stats.

The on-disk format is JSON lines, one record per line, UTF-8, LF endings,
with keys ``id``, ``benefits``, ``applications``, ``challenge``,
``innovation``, ``biomimicry``. Loading normalizes whitespace and keyword
case so every downstream prompt render sees canonical text.
"""

from __future__ import annotations

import json
import random
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .errors import EmptyCorpus, MissingFile, ParseError, ValidationError

FIELD_ORDER = ("id", "benefits", "applications", "challenge", "innovation", "biomimicry")
_KEYWORD_FIELDS = ("benefits", "applications")
_PARAGRAPH_FIELDS = ("challenge", "innovation", "biomimicry")
_WS = re.compile(r"\s+")


def normalize_text(text: str) -> str:
    """Collapse whitespace runs to single spaces and trim. Idempotent."""
    return _WS.sub(" ", text).strip()


def normalize_keyword(keyword: str) -> str:
    return normalize_text(keyword).lower()


@dataclass(frozen=True)
class InnovationRecord:
    """One innovation sample: keyword lists plus three paragraphs."""

    id: str
    benefits: tuple[str, ...]
    applications: tuple[str, ...]
    challenge: str
    innovation: str
    biomimicry: str

    def normalized(self) -> "InnovationRecord":
        """Canonical form: trimmed/lower-cased keywords de-duplicated
        preserving first occurrence, paragraphs whitespace-collapsed."""
        return InnovationRecord(
            id=normalize_text(self.id),
            benefits=_dedupe(normalize_keyword(k) for k in self.benefits),
            applications=_dedupe(normalize_keyword(k) for k in self.applications),
            challenge=normalize_text(self.challenge),
            innovation=normalize_text(self.innovation),
            biomimicry=normalize_text(self.biomimicry),
        )

    def to_json(self) -> str:
        obj = {name: getattr(self, name) for name in FIELD_ORDER}
        obj["benefits"] = list(self.benefits)
        obj["applications"] = list(self.applications)
        return json.dumps(obj, ensure_ascii=False)


def _dedupe(keywords) -> tuple[str, ...]:
    return tuple(dict.fromkeys(keywords))


@dataclass(frozen=True)
class Corpus:
    records: tuple[InnovationRecord, ...]
    source_path: str

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def ids(self) -> set[str]:
        return {r.id for r in self.records}


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction <= 1.0:
            raise ValueError(f"train_fraction must be in (0, 1], got {self.train_fraction}")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")


def validate_record(record: InnovationRecord) -> list[str]:
    """Return violation descriptions, one per broken rule; empty when valid."""
    violations: list[str] = []
    if not normalize_text(record.id):
        violations.append("id: empty")
    if not record.applications:
        violations.append("applications: empty list")
    for field in _KEYWORD_FIELDS:
        keywords = getattr(record, field)
        seen: set[str] = set()
        for keyword in keywords:
            canon = normalize_keyword(keyword)
            if not canon:
                violations.append(f"{field}: blank keyword")
            elif canon in seen:
                violations.append(f"{field}: duplicate keyword {canon!r}")
            seen.add(canon)
    for field in _PARAGRAPH_FIELDS:
        if not normalize_text(getattr(record, field)):
            violations.append(f"{field}: empty")
    return violations


def _record_from_obj(obj: object, line_no: int) -> InnovationRecord:
    if not isinstance(obj, dict):
        raise ParseError(line_no, "record is not an object")
    for key in FIELD_ORDER:
        if key not in obj:
            raise ParseError(line_no, f"missing key {key!r}")
    if not isinstance(obj["id"], str):
        raise ParseError(line_no, "id must be a string")
    for key in _KEYWORD_FIELDS:
        val = obj[key]
        if not isinstance(val, list) or any(not isinstance(k, str) for k in val):
            raise ParseError(line_no, f"{key} must be an array of strings")
    for key in _PARAGRAPH_FIELDS:
        if not isinstance(obj[key], str):
            raise ParseError(line_no, f"{key} must be a string")
    return InnovationRecord(
        id=obj["id"],
        benefits=tuple(obj["benefits"]),
        applications=tuple(obj["applications"]),
        challenge=obj["challenge"],
        innovation=obj["innovation"],
        biomimicry=obj["biomimicry"],
    )


def load_corpus(path: str | Path) -> Corpus:
    """Load, normalize, and validate a JSONL corpus. Order is file order."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(str(path))
    records: list[InnovationRecord] = []
    seen_ids: set[str] = set()
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(line_no, f"invalid JSON: {exc.msg}") from exc
            record = _record_from_obj(obj, line_no).normalized()
            violations = validate_record(record)
            if violations:
                field = violations[0].split(":", 1)[0]
                raise ValidationError(record.id or f"line {line_no}", field, "; ".join(violations))
            if record.id in seen_ids:
                raise ValidationError(record.id, "id", "duplicate id")
            seen_ids.add(record.id)
            records.append(record)
    if not records:
        raise EmptyCorpus(f"no records in {path}")
    return Corpus(records=tuple(records), source_path=str(path))


def serialize_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write the corpus back out in the line format; load round-trips."""
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for record in corpus.records:
            fh.write(record.to_json() + "\n")


def split_corpus(corpus: Corpus, spec: SplitSpec) -> tuple[Corpus, Corpus]:
    """Seeded shuffle, then the first floor(fraction*n) records form train."""
    if not corpus.records:
        raise EmptyCorpus("cannot split an empty corpus")
    indices = list(range(len(corpus.records)))
    random.Random(spec.seed).shuffle(indices)
    n_train = int(spec.train_fraction * len(indices))
    train = tuple(corpus.records[i] for i in indices[:n_train])
    validation = tuple(corpus.records[i] for i in indices[n_train:])
    return (
        Corpus(records=train, source_path=corpus.source_path),
        Corpus(records=validation, source_path=corpus.source_path),
    )


def corpus_stats(corpus: Corpus, top_k: int = 20) -> dict:
    """Summary counts over normalized text: per-field word counts and the
    most frequent application keywords."""
    if not corpus.records:
        raise EmptyCorpus("no records to summarize")
    stats: dict = {"record_count": len(corpus.records), "fields": {}}
    for field in _PARAGRAPH_FIELDS:
        counts = [len(getattr(r, field).split()) for r in corpus.records]
        stats["fields"][field] = {
            "mean_words": sum(counts) / len(counts),
            "max_words": max(counts),
        }
    for field in _KEYWORD_FIELDS:
        counts = [len(getattr(r, field)) for r in corpus.records]
        stats["fields"][field] = {
            "mean_keywords": sum(counts) / len(counts),
            "max_keywords": max(counts),
        }
    freq = Counter(k for r in corpus.records for k in r.applications)
    top = sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))[:top_k]
    stats["top_applications"] = [{"keyword": k, "count": c} for k, c in top]
    return stats
