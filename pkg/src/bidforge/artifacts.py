"""Run-directory artifacts: concepts/evaluations as JSONL, pass rates as
JSON, and a TOML manifest that fully determines a mock rerun.

Serialization is byte-deterministic (fixed key order, no timestamps) so two
runs with the same inputs produce identical directories.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Sequence

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .concept_engine import (
    ConceptEvaluation,
    GeneratedConcept,
    PassRateTable,
    ProblemSpec,
)
from .errors import MissingFile
from .llm_gateway import Verdict
from .prompt_forge import EvaluatorPair, GeneratorType, Label

CONCEPTS_FILE = "concepts.jsonl"
EVALUATIONS_FILE = "evaluations.jsonl"
PASSRATES_FILE = "passrates.json"
MANIFEST_FILE = "run.toml"
REPORT_FILE = "report.txt"


def concept_to_dict(concept: GeneratedConcept) -> dict:
    return {
        "concept_id": concept.concept_id,
        "gtype": concept.gtype.value,
        "applications": list(concept.spec.applications),
        "benefits": list(concept.spec.benefits),
        "challenge": concept.spec.challenge,
        "biomimicry": concept.biomimicry,
        "innovation": concept.innovation,
        "raw": concept.raw,
        "model_id": concept.model_id,
    }


def concept_from_dict(obj: dict) -> GeneratedConcept:
    return GeneratedConcept(
        concept_id=obj["concept_id"],
        gtype=GeneratorType(obj["gtype"]),
        spec=ProblemSpec(
            applications=tuple(obj.get("applications", ())),
            benefits=tuple(obj.get("benefits", ())),
            challenge=obj.get("challenge", ""),
        ),
        biomimicry=obj["biomimicry"],
        innovation=obj["innovation"],
        raw=obj.get("raw", ""),
        model_id=obj.get("model_id", ""),
    )


def evaluation_to_dict(evaluation: ConceptEvaluation) -> dict:
    return {
        "concept_id": evaluation.concept_id,
        "gtype": evaluation.gtype.value,
        "verdicts": {
            pair.value: {"label": verdict.label.value, "confidence": verdict.confidence}
            for pair, verdict in evaluation.verdicts.items()
        },
        "passed": {pair.value: ok for pair, ok in evaluation.passed.items()},
        "overall": evaluation.overall,
    }


def evaluation_from_dict(obj: dict) -> ConceptEvaluation:
    verdicts = {
        EvaluatorPair(name): Verdict(
            pair=EvaluatorPair(name),
            label=Label(body["label"]),
            confidence=body["confidence"],
        )
        for name, body in obj["verdicts"].items()
    }
    return ConceptEvaluation(
        concept_id=obj["concept_id"],
        gtype=GeneratorType(obj["gtype"]),
        verdicts=verdicts,
        passed={EvaluatorPair(name): ok for name, ok in obj["passed"].items()},
        overall=obj["overall"],
    )


def write_jsonl(path: str | Path, rows: Sequence[dict]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def read_jsonl(path: str | Path) -> list[dict]:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(str(path))
    rows = []
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rows.append(json.loads(line))
    return rows


def passrates_to_dict(table: PassRateTable) -> dict:
    out = {}
    for gtype, row in sorted(table.rows.items(), key=lambda kv: kv[0].value):
        out[gtype.value] = {
            "total": row.total,
            "problem_solution": {
                "pair": row.problem_pair.value if row.problem_pair else None,
                "passed": row.problem_passed if row.problem_pair else None,
                "rate_percent": row.problem_solution_rate,
            },
            "nature_solution": {
                "passed": row.nature_passed,
                "rate_percent": row.nature_solution_rate,
            },
            "overall": {"passed": row.overall_passed, "rate_percent": row.overall_rate},
        }
    return out


def render_report(table: PassRateTable) -> str:
    """Human-readable pass-rate table with only the applicable columns."""
    lines = []
    for gtype, row in sorted(table.rows.items(), key=lambda kv: kv[0].value):
        lines.append(f"[{gtype.value}] {row.total} concepts evaluated")
        if row.problem_pair is not None:
            lines.append(
                f"  problem-solution: {row.problem_passed}/{row.total}"
                f" ({row.problem_solution_rate}%)"
            )
        lines.append(
            f"  nature-solution:  {row.nature_passed}/{row.total}"
            f" ({row.nature_solution_rate}%)"
        )
        lines.append(f"  overall:          {row.overall_passed}/{row.total} ({row.overall_rate}%)")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# manifest: flat TOML with one level of tables

def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {type(value).__name__} into the manifest")


def write_manifest(path: str | Path, data: dict) -> None:
    """Emit a manifest: scalar keys first, then one [table] per dict value.
    Key order follows the mapping, so identical inputs yield identical bytes."""
    lines = []
    tables = []
    for key, value in data.items():
        if isinstance(value, dict):
            tables.append((key, value))
        elif value is not None:
            lines.append(f"{key} = {_toml_value(value)}")
    for name, table in tables:
        lines.append("")
        lines.append(f"[{name}]")
        for key, value in table.items():
            if value is not None:
                lines.append(f"{key} = {_toml_value(value)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_manifest(path: str | Path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(str(path))
    with path.open("rb") as fh:
        return tomllib.load(fh)
