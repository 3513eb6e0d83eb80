"""Fine-tuning dataset compilation.

Builds prompt/completion pairs for the three concept generators and the
random-innovation negative generator, and marker-wrapped Related/Unrelated
pairs for the correlation evaluators. Prompt and completion conventions are
fixed here and reused verbatim at generation time so that inference prompts
are byte-identical to training prompts.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

from .corpus import Corpus, InnovationRecord
from .errors import (
    EmptyOutput,
    ExemplarCountError,
    InsufficientNegatives,
    MissingField,
    ParseError,
)
from .markup import mark, parse_marked

PROMPT_SEPARATOR = "\n\n###\n\n"
COMPLETION_STOP = "\n[END]"

TAG_BIO = "Bio"
TAG_INNO = "Inno"
TAG_BENEFITS = "Ben"
TAG_CHALLENGE = "Cha"


class GeneratorType(str, Enum):
    """The three problem-space representations, plus the negative generator
    that produces innovation details only."""

    TYPE1 = "type1"  # applications -> biomimicry + innovation
    TYPE2 = "type2"  # benefits + applications -> biomimicry + innovation
    TYPE3 = "type3"  # challenge statement -> biomimicry + innovation
    NEGGEN = "neggen"  # applications -> innovation only

    @property
    def emits_bio(self) -> bool:
        return self is not GeneratorType.NEGGEN

    @property
    def input_fields(self) -> tuple[str, ...]:
        if self is GeneratorType.TYPE2:
            return ("benefits", "applications")
        if self is GeneratorType.TYPE3:
            return ("challenge",)
        return ("applications",)

    @property
    def output_fields(self) -> tuple[str, ...]:
        if self is GeneratorType.NEGGEN:
            return ("innovation",)
        return ("biomimicry", "innovation")


class Label(str, Enum):
    RELATED = "related"
    UNRELATED = "unrelated"

    @property
    def token(self) -> str:
        # single-token completion labels, leading space included
        return " " + self.value


class EvaluatorPair(str, Enum):
    """Domain pairs checked by the correlation evaluators. Domain A is the
    problem or nature side; domain B is always the innovation."""

    BENEFITS_INNOVATION = "benefits_innovation"
    CHALLENGE_INNOVATION = "challenge_innovation"
    BIO_INNOVATION = "bio_innovation"

    @property
    def tag_a(self) -> str:
        return {
            EvaluatorPair.BENEFITS_INNOVATION: TAG_BENEFITS,
            EvaluatorPair.CHALLENGE_INNOVATION: TAG_CHALLENGE,
            EvaluatorPair.BIO_INNOVATION: TAG_BIO,
        }[self]

    @property
    def field_a(self) -> str:
        return {
            EvaluatorPair.BENEFITS_INNOVATION: "benefits",
            EvaluatorPair.CHALLENGE_INNOVATION: "challenge",
            EvaluatorPair.BIO_INNOVATION: "biomimicry",
        }[self]

    def domain_a(self, record: InnovationRecord) -> str:
        value = getattr(record, self.field_a)
        if isinstance(value, tuple):
            value = ", ".join(value)
        if not value:
            raise MissingField(self, self.field_a)
        return value


TAGS_BY_PAIR = {pair: (pair.tag_a, TAG_INNO) for pair in EvaluatorPair}
PAIR_BY_TAGS = {frozenset(tags): pair for pair, tags in TAGS_BY_PAIR.items()}


@dataclass(frozen=True)
class TrainingExample:
    prompt: str
    completion: str


@dataclass(frozen=True)
class LabeledExample:
    """Marker-wrapped domain A + domain B text with a relatedness label."""

    text: str
    label: Label

    def to_training_example(self) -> TrainingExample:
        return TrainingExample(prompt=self.text + PROMPT_SEPARATOR, completion=self.label.token)


@dataclass(frozen=True)
class SkippedRecord:
    record_id: str
    reason: str


def render_prompt(
    gtype: GeneratorType,
    *,
    applications: Sequence[str] = (),
    benefits: Sequence[str] = (),
    challenge: str = "",
) -> str:
    """Render the fixed prompt template for a generator type, separator
    included. The same function serves training and inference."""
    if gtype is GeneratorType.TYPE2:
        if not benefits:
            raise MissingField(gtype, "benefits")
        if not applications:
            raise MissingField(gtype, "applications")
        body = f"Benefits: {', '.join(benefits)}\nApplications: {', '.join(applications)}"
    elif gtype is GeneratorType.TYPE3:
        if not challenge:
            raise MissingField(gtype, "challenge")
        body = f"Challenge: {challenge}"
    else:
        if not applications:
            raise MissingField(gtype, "applications")
        body = f"Applications: {', '.join(applications)}"
    return body + PROMPT_SEPARATOR


def render_generator_example(record: InnovationRecord, gtype: GeneratorType) -> TrainingExample:
    """One prompt/completion pair. Completions carry a leading space, marker
    blocks for the emitted fields, and the trailing stop token."""
    for field in gtype.output_fields:
        if not getattr(record, field):
            raise MissingField(gtype, field)
    prompt = render_prompt(
        gtype,
        applications=record.applications,
        benefits=record.benefits,
        challenge=record.challenge,
    )
    if gtype.emits_bio:
        body = mark(record.biomimicry, TAG_BIO) + mark(record.innovation, TAG_INNO)
    else:
        body = mark(record.innovation, TAG_INNO)
    return TrainingExample(prompt=prompt, completion=" " + body + COMPLETION_STOP)


def build_generator_dataset(
    corpus: Corpus, gtype: GeneratorType
) -> tuple[list[TrainingExample], list[SkippedRecord]]:
    """One example per record that has all fields the type needs; records
    lacking them are skipped and reported. Output order is corpus order."""
    examples: list[TrainingExample] = []
    skipped: list[SkippedRecord] = []
    for record in corpus:
        try:
            examples.append(render_generator_example(record, gtype))
        except MissingField as exc:
            skipped.append(SkippedRecord(record.id, f"missing {exc.field}"))
    if not examples:
        raise EmptyOutput(f"no record qualifies for {gtype.value}")
    return examples, skipped


def build_evaluator_dataset(
    corpus: Corpus,
    pair: EvaluatorPair,
    negatives: Sequence[str],
    seed: int,
    allow_replacement: bool = True,
) -> tuple[list[LabeledExample], list[SkippedRecord]]:
    """Balanced Related/Unrelated pairs per Fig-2-style construction.

    Each qualifying record yields one Related example (its own domain A and
    innovation) and one Unrelated example (same domain A, a negative domain B
    drawn by seeded choice, never byte-equal to the record's own innovation).
    Drawn without replacement while the pool allows, otherwise with
    replacement unless disabled.
    """
    if not negatives:
        raise InsufficientNegatives("empty negative pool")
    qualifying: list[InnovationRecord] = []
    skipped: list[SkippedRecord] = []
    for record in corpus:
        if not getattr(record, pair.field_a):
            skipped.append(SkippedRecord(record.id, f"missing {pair.field_a}"))
            continue
        if not record.innovation:
            skipped.append(SkippedRecord(record.id, "missing innovation"))
            continue
        qualifying.append(record)
    if not qualifying:
        raise EmptyOutput(f"no record qualifies for {pair.value}")

    rng = random.Random(seed)
    drawn = _draw_negatives(qualifying, list(negatives), rng, allow_replacement)

    examples: list[LabeledExample] = []
    for record, negative in zip(qualifying, drawn):
        domain_a = pair.domain_a(record)
        positive_text = mark(domain_a, pair.tag_a) + mark(record.innovation, TAG_INNO)
        negative_text = mark(domain_a, pair.tag_a) + mark(negative, TAG_INNO)
        examples.append(LabeledExample(positive_text, Label.RELATED))
        examples.append(LabeledExample(negative_text, Label.UNRELATED))
    return examples, skipped


def _draw_negatives(
    records: Sequence[InnovationRecord],
    pool: list[str],
    rng: random.Random,
    allow_replacement: bool,
) -> list[str]:
    needed = len(records)
    if len(pool) >= needed:
        rng.shuffle(pool)
        for k, record in enumerate(records):
            if pool[k] != record.innovation:
                continue
            swap = next(
                (j for j in range(k + 1, len(pool)) if pool[j] != record.innovation), None
            )
            if swap is None:
                raise InsufficientNegatives(
                    f"pool exhausted avoiding the positive of record {record.id!r}"
                )
            pool[k], pool[swap] = pool[swap], pool[k]
        return pool[:needed]
    if not allow_replacement:
        raise InsufficientNegatives(f"pool of {len(pool)} cannot cover {needed} records")
    drawn = []
    for record in records:
        candidates = [t for t in pool if t != record.innovation]
        if not candidates:
            raise InsufficientNegatives(
                f"pool exhausted avoiding the positive of record {record.id!r}"
            )
        drawn.append(candidates[rng.randrange(len(candidates))])
    return drawn


def negative_solution_request(
    applications: Sequence[str],
    model_id: str,
    *,
    temperature: float = 0.8,
    max_tokens: int = 400,
    n: int = 1,
):
    """Completion request for the negative generator: prompt built from the
    applications only, so the output shares topic but ignores the problem."""
    from .llm_gateway import CompletionRequest

    prompt = render_prompt(GeneratorType.NEGGEN, applications=applications)
    return CompletionRequest(
        model_id=model_id,
        prompt=prompt,
        max_tokens=max_tokens,
        temperature=temperature,
        stop=(COMPLETION_STOP,),
        n=n,
    )


def negative_nonbio_request(
    exemplars: Sequence[str],
    model_id: str = "davinci",
    *,
    temperature: float = 0.8,
    max_tokens: int = 300,
    n: int = 1,
):
    """Few-shot request producing biology-free innovation text, used as the
    Unrelated domain B for the nature-solution evaluator."""
    from .llm_gateway import CompletionRequest

    if len(exemplars) != 5:
        raise ExemplarCountError(f"need exactly 5 exemplars, got {len(exemplars)}")
    shots = "\n\n".join(f"Innovation: {text}" for text in exemplars)
    prompt = (
        "Each example below describes a product innovation in plain engineering terms.\n\n"
        + shots
        + "\n\nInnovation:"
    )
    return CompletionRequest(
        model_id=model_id,
        prompt=prompt,
        max_tokens=max_tokens,
        temperature=temperature,
        stop=("\n\n",),
        n=n,
    )


def compute_batch_size(n_examples: int) -> int:
    """Fine-tune batch size: 0.2% of the training-set size, at least 1."""
    if n_examples < 1:
        raise ValueError("n_examples must be >= 1")
    return max(1, math.floor(0.002 * n_examples + 0.5))


def serialize_training_file(
    examples: Sequence[TrainingExample | LabeledExample], path: str | Path
) -> None:
    """Write one JSON object per line with keys prompt/completion.
    Byte-deterministic for identical inputs."""
    if not examples:
        raise EmptyOutput("refusing to write an empty training file")
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for example in examples:
            if isinstance(example, LabeledExample):
                example = example.to_training_example()
            fh.write(
                json.dumps(
                    {"prompt": example.prompt, "completion": example.completion},
                    ensure_ascii=False,
                )
                + "\n"
            )


def read_training_file(path: str | Path) -> list[TrainingExample]:
    """Parse a training file back; raises ParseError with the line number."""
    examples: list[TrainingExample] = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(line_no, f"invalid JSON: {exc.msg}") from exc
            if (
                not isinstance(obj, dict)
                or not isinstance(obj.get("prompt"), str)
                or not isinstance(obj.get("completion"), str)
            ):
                raise ParseError(line_no, "expected string keys prompt/completion")
            examples.append(TrainingExample(obj["prompt"], obj["completion"]))
    return examples


def infer_pair(text: str) -> EvaluatorPair:
    """Recover the evaluator pair from the tag structure of a marked text."""
    tags = frozenset(parse_marked(text))
    pair = PAIR_BY_TAGS.get(tags)
    if pair is None:
        raise MissingField("classification", f"tags {sorted(tags)} match no evaluator pair")
    return pair
