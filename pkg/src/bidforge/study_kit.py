"""Case-study instrumentation: biological-source categorization of concepts
and the feasibility/novelty survey round trip.

Categorization is lexicon-based so the whole pipeline stays offline and
auditable: each category owns a disjoint keyword set, most hits wins, ties
break on earliest hit position, and zero hits falls through to ``other``.
The survey is a human-editable text file; raters fill in scores, the same
format is imported back, and a sidecar key maps blind item labels to concept
groups.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import EmptyInput, FormatError, MissingFile, UnknownConcept
from .transport_metrics.nbow import tokenize

OTHER_CATEGORY = "other"
BENCHMARK_GROUP = "benchmark"

FEASIBILITY_RUBRIC = {
    1: "The concept makes no sense from the engineering perspective.",
    2: "The concept makes little sense with today's technology, but could be possible in the future.",
    3: "The concept makes sense, but efforts are needed to work out a practical technical roadmap.",
    4: "The concept makes good sense, and a technical roadmap can be easily established to realize it.",
    5: "The concept makes perfect sense and there are existing tools, materials, or components to realize it.",
}

NOVELTY_RUBRIC = {
    1: "Solution exists and is commonly seen in the target domain (target domain = the target product described in the concept).",
    2: "Solution exists but is uncommon in target domain.",
    3: "New features are proposed for target domain, but similar approaches or technology can be commonly seen in related industries (related industries = flying car, drone, automobile, robotics, etc.).",
    4: "New features are proposed for target domain, and similar approaches or technology can be rarely found in related industries.",
    5: "New features are proposed, and no similar approaches or technology can be found nowadays.",
}


@dataclass(frozen=True)
class BioLexicon:
    """Category name -> keyword set; keywords are disjoint across categories
    and ``other`` is always present and keyword-free."""

    categories: dict[str, frozenset[str]]

    def __post_init__(self):
        seen: dict[str, str] = {}
        for name, keywords in self.categories.items():
            for keyword in keywords:
                if keyword in seen:
                    raise ValueError(
                        f"keyword {keyword!r} appears in both {seen[keyword]!r} and {name!r}"
                    )
                seen[keyword] = name
        if self.categories.get(OTHER_CATEGORY):
            raise ValueError("the 'other' category must stay keyword-free")
        if OTHER_CATEGORY not in self.categories:
            self.categories[OTHER_CATEGORY] = frozenset()


def load_lexicon(path: str | Path | None = None) -> BioLexicon:
    """Parse a lexicon file: ``[category]`` section headers, one keyword per
    line, ``#`` comments allowed."""
    if path is None:
        text = resources.files("bidforge.data").joinpath("bio_lexicon.txt").read_text("utf-8")
    else:
        path = Path(path)
        if not path.is_file():
            raise MissingFile(str(path))
        text = path.read_text("utf-8")
    categories: dict[str, set[str]] = {}
    current: str | None = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().lower()
            if current in categories:
                raise FormatError(line_no, f"duplicate category {current!r}")
            categories[current] = set()
            continue
        if current is None:
            raise FormatError(line_no, f"keyword {line!r} before any [category] header")
        categories[current].add(line.lower())
    return BioLexicon(categories={k: frozenset(v) for k, v in categories.items()})


def categorize_bio(concept, lexicon: BioLexicon) -> str:
    """Category with the most keyword hits in the biomimicry text; ties break
    on earliest first hit; no hits means ``other``."""
    text = concept if isinstance(concept, str) else concept.biomimicry
    tokens = tokenize(text)
    hits: dict[str, int] = {}
    first_hit: dict[str, int] = {}
    for position, token in enumerate(tokens):
        for name, keywords in lexicon.categories.items():
            if token in keywords:
                hits[name] = hits.get(name, 0) + 1
                first_hit.setdefault(name, position)
                break
    if not hits:
        return OTHER_CATEGORY
    return min(hits, key=lambda name: (-hits[name], first_hit[name]))


@dataclass(frozen=True)
class CategoryDistribution:
    counts: dict[str, int]
    percentages: dict[str, int]


def category_distribution(concepts, lexicon: BioLexicon) -> CategoryDistribution:
    concepts = list(concepts)
    if not concepts:
        raise EmptyInput("no concepts to categorize")
    counts = {name: 0 for name in lexicon.categories}
    for concept in concepts:
        counts[categorize_bio(concept, lexicon)] += 1
    total = len(concepts)
    percentages = {
        name: (200 * count + total) // (2 * total) for name, count in counts.items()
    }
    return CategoryDistribution(counts=counts, percentages=percentages)


# --------------------------------------------------------------------------
# survey export / import / summary

@dataclass(frozen=True)
class ExternalConcept:
    """Benchmark item from an outside source, shown to raters like any other."""

    concept_id: str
    biomimicry: str
    innovation: str


@dataclass(frozen=True)
class ScoreRecord:
    concept_id: str
    rater_id: str
    feasibility: int
    novelty: int


@dataclass(frozen=True)
class RejectedRow:
    source: str
    item: str
    reason: str


def _benchmark_slots(n_generated: int, n_benchmarks: int) -> list[int]:
    """Fixed, evenly spaced positions for benchmark items."""
    total = n_generated + n_benchmarks
    return [round((i + 1) * total / (n_benchmarks + 1)) - 1 for i in range(n_benchmarks)]


def export_survey(concepts, benchmarks, path: str | Path) -> dict:
    """Write the blind survey file plus a ``<path>.key.json`` sidecar mapping
    item labels to concept ids and groups. Returns the key mapping.

    Benchmark items are interleaved at fixed positions and carry the same
    anonymous labels as generated concepts, so raters cannot tell them apart.
    """
    concepts = list(concepts)
    benchmarks = list(benchmarks)
    if not concepts:
        raise EmptyInput("no concepts to export")
    slots = set(_benchmark_slots(len(concepts), len(benchmarks)))
    items: list = []
    gen_iter = iter(concepts)
    bench_iter = iter(benchmarks)
    for position in range(len(concepts) + len(benchmarks)):
        items.append(next(bench_iter) if position in slots else next(gen_iter))

    key: dict[str, dict] = {}
    lines: list[str] = ["# Concept evaluation survey", "rater:", ""]
    lines.append("# Rate every item on both scales using the rubrics below.")
    lines.append("# Feasibility:")
    for rank in sorted(FEASIBILITY_RUBRIC):
        lines.append(f"#   {rank} - {FEASIBILITY_RUBRIC[rank]}")
    lines.append("# Novelty:")
    for rank in sorted(NOVELTY_RUBRIC):
        lines.append(f"#   {rank} - {NOVELTY_RUBRIC[rank]}")
    lines.append("")
    for position, item in enumerate(items, start=1):
        label = f"item-{position:02d}"
        group = (
            BENCHMARK_GROUP
            if isinstance(item, ExternalConcept)
            else getattr(item.gtype, "value", str(getattr(item, "gtype", "unknown")))
        )
        key[label] = {"concept_id": item.concept_id, "group": group}
        lines.append(f"== {label} ==")
        lines.append(f"biomimicry: {item.biomimicry}")
        lines.append(f"innovation: {item.innovation}")
        lines.append("feasibility:")
        lines.append("novelty:")
        lines.append("")
    Path(path).write_text("\n".join(lines), encoding="utf-8", newline="\n")
    key_path = Path(str(path) + ".key.json")
    key_path.write_text(json.dumps(key, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return key


def load_survey_key(path: str | Path) -> dict[str, str]:
    """Item label -> group mapping from an export sidecar."""
    key = json.loads(Path(path).read_text("utf-8"))
    return {label: entry["group"] for label, entry in key.items()}


_ITEM_RE = re.compile(r"^== (\S+) ==$")
_SCORE_RE = re.compile(r"^(feasibility|novelty):\s*(.*)$")


def import_scores(path: str | Path) -> tuple[list[ScoreRecord], list[RejectedRow]]:
    """Read filled survey files back into score records.

    ``path`` may be one response file or a directory of them (one per rater).
    Rows out of the 1..5 range or missing a score are rejected with reasons,
    not fatal.
    """
    path = Path(path)
    if path.is_dir():
        files = sorted(p for p in path.iterdir() if p.suffix == ".txt")
    elif path.is_file():
        files = [path]
    else:
        raise MissingFile(str(path))
    records: list[ScoreRecord] = []
    rejected: list[RejectedRow] = []
    for file_path in files:
        records_f, rejected_f = _parse_response_file(file_path)
        records.extend(records_f)
        rejected.extend(rejected_f)
    return records, rejected


def _parse_response_file(path: Path) -> tuple[list[ScoreRecord], list[RejectedRow]]:
    rater = path.stem
    records: list[ScoreRecord] = []
    rejected: list[RejectedRow] = []
    item: str | None = None
    scores: dict[str, str] = {}

    def flush() -> None:
        if item is None:
            return
        problems = []
        values = {}
        for scale in ("feasibility", "novelty"):
            raw = scores.get(scale, "")
            if not raw:
                problems.append(f"missing {scale}")
                continue
            try:
                value = int(raw)
            except ValueError:
                problems.append(f"{scale} not an integer: {raw!r}")
                continue
            if not 1 <= value <= 5:
                problems.append(f"{scale} out of range: {value}")
                continue
            values[scale] = value
        if problems:
            rejected.append(RejectedRow(source=str(path), item=item, reason="; ".join(problems)))
        else:
            records.append(
                ScoreRecord(
                    concept_id=item,
                    rater_id=rater,
                    feasibility=values["feasibility"],
                    novelty=values["novelty"],
                )
            )

    for raw_line in path.read_text("utf-8").splitlines():
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("rater:"):
            value = line.split(":", 1)[1].strip()
            if value:
                rater = value
            continue
        match = _ITEM_RE.match(line)
        if match:
            flush()
            item = match.group(1)
            scores = {}
            continue
        match = _SCORE_RE.match(line)
        if match and item is not None:
            scores[match.group(1)] = match.group(2).strip()
    flush()
    return records, rejected


@dataclass(frozen=True)
class ScoreSummary:
    groups: dict
    usable_count: int

    def to_dict(self) -> dict:
        return {"usable_count": self.usable_count, "groups": self.groups}


def score_summary(records, concept_index: dict[str, str]) -> ScoreSummary:
    """Per-group mean feasibility/novelty plus 1..5 histograms. Every record
    must resolve to a group through ``concept_index``."""
    records = list(records)
    groups: dict[str, dict] = {}
    for record in records:
        group = concept_index.get(record.concept_id)
        if group is None:
            raise UnknownConcept(record.concept_id)
        bucket = groups.setdefault(
            group,
            {
                "count": 0,
                "feasibility_sum": 0,
                "novelty_sum": 0,
                "feasibility_hist": {i: 0 for i in range(1, 6)},
                "novelty_hist": {i: 0 for i in range(1, 6)},
            },
        )
        bucket["count"] += 1
        bucket["feasibility_sum"] += record.feasibility
        bucket["novelty_sum"] += record.novelty
        bucket["feasibility_hist"][record.feasibility] += 1
        bucket["novelty_hist"][record.novelty] += 1
    summary = {}
    for group, bucket in sorted(groups.items()):
        summary[group] = {
            "count": bucket["count"],
            "mean_feasibility": bucket["feasibility_sum"] / bucket["count"],
            "mean_novelty": bucket["novelty_sum"] / bucket["count"],
            "feasibility_hist": bucket["feasibility_hist"],
            "novelty_hist": bucket["novelty_hist"],
        }
    return ScoreSummary(groups=summary, usable_count=len(records))
