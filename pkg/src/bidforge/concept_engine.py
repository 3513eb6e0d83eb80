"""Concept generation, parsing, correlation evaluation, and pass-rate
aggregation.

A problem spec plus a generator type yields raw completions through the
gateway; each is parsed into a (biomimicry, innovation) pair, run through
the evaluators applicable to its type, and folded into a pass-rate table.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import (
    AllMalformed,
    EmptyBlock,
    EmptyInput,
    MalformedMarkup,
    MissingEvaluatorModel,
    MissingField,
    MixedTypes,
)
from .llm_gateway import CompletionRequest, Gateway, Verdict
from .markup import mark, parse_marked
from .prompt_forge import (
    COMPLETION_STOP,
    TAG_BIO,
    TAG_INNO,
    EvaluatorPair,
    GeneratorType,
    Label,
    render_prompt,
)

# evaluator pairs applicable to each generation type; the nature-solution
# check applies everywhere, the problem-solution check only where the
# problem side exists in the inputs
APPLICABLE_PAIRS: dict[GeneratorType, tuple[EvaluatorPair, ...]] = {
    GeneratorType.TYPE1: (EvaluatorPair.BIO_INNOVATION,),
    GeneratorType.TYPE2: (EvaluatorPair.BENEFITS_INNOVATION, EvaluatorPair.BIO_INNOVATION),
    GeneratorType.TYPE3: (EvaluatorPair.CHALLENGE_INNOVATION, EvaluatorPair.BIO_INNOVATION),
}

PROBLEM_PAIRS = (EvaluatorPair.BENEFITS_INNOVATION, EvaluatorPair.CHALLENGE_INNOVATION)


@dataclass(frozen=True)
class ProblemSpec:
    applications: tuple[str, ...] = ()
    benefits: tuple[str, ...] = ()
    challenge: str = ""

    def require_for(self, gtype: GeneratorType) -> None:
        if gtype is GeneratorType.TYPE3:
            if not self.challenge:
                raise MissingField(gtype, "challenge")
            return
        if not self.applications:
            raise MissingField(gtype, "applications")
        if gtype is GeneratorType.TYPE2 and not self.benefits:
            raise MissingField(gtype, "benefits")


@dataclass(frozen=True)
class GeneratedConcept:
    concept_id: str
    gtype: GeneratorType
    spec: ProblemSpec
    biomimicry: str
    innovation: str
    raw: str
    model_id: str


@dataclass(frozen=True)
class SkippedSlot:
    index: int
    reasons: tuple[str, ...]


@dataclass(frozen=True)
class ConceptEvaluation:
    concept_id: str
    gtype: GeneratorType
    verdicts: Mapping[EvaluatorPair, Verdict]
    passed: Mapping[EvaluatorPair, bool]
    overall: bool


@dataclass(frozen=True)
class PassRateRow:
    """Counts and whole-percent rates for one generator type."""

    gtype: GeneratorType
    total: int
    problem_pair: EvaluatorPair | None
    problem_passed: int
    nature_passed: int
    overall_passed: int

    @property
    def problem_solution_rate(self) -> int | None:
        if self.problem_pair is None:
            return None
        return _percent(self.problem_passed, self.total)

    @property
    def nature_solution_rate(self) -> int:
        return _percent(self.nature_passed, self.total)

    @property
    def overall_rate(self) -> int:
        return _percent(self.overall_passed, self.total)


@dataclass
class PassRateTable:
    rows: dict[GeneratorType, PassRateRow] = field(default_factory=dict)

    def merge(self, other: "PassRateTable") -> "PassRateTable":
        merged = dict(self.rows)
        merged.update(other.rows)
        return PassRateTable(rows=merged)


def _percent(count: int, total: int) -> int:
    """Whole-number percent, round half up, in exact integer arithmetic."""
    return (200 * count + total) // (2 * total) if total else 0


def assemble_prompt(spec: ProblemSpec, gtype: GeneratorType) -> str:
    """Byte-identical to the training-time prompt for the same fields."""
    spec.require_for(gtype)
    return render_prompt(
        gtype,
        applications=spec.applications,
        benefits=spec.benefits,
        challenge=spec.challenge,
    )


def parse_generation(raw: str) -> tuple[str, str]:
    """Extract (biomimicry, innovation) from a raw completion."""
    blocks = parse_marked(raw)
    if set(blocks) != {TAG_BIO, TAG_INNO}:
        raise MalformedMarkup(f"expected [Bio] and [Inno] blocks, got {sorted(blocks)}")
    bio = blocks[TAG_BIO].strip()
    inno = blocks[TAG_INNO].strip()
    if not bio:
        raise EmptyBlock(TAG_BIO)
    if not inno:
        raise EmptyBlock(TAG_INNO)
    return bio, inno


def generate_concepts(
    gateway: Gateway,
    spec: ProblemSpec,
    gtype: GeneratorType,
    n: int,
    *,
    model_id: str,
    run_id: str,
    temperature: float = 0.8,
    max_tokens: int = 400,
    retry_cap: int = 3,
) -> tuple[list[GeneratedConcept], list[SkippedSlot]]:
    """Generate up to n concepts with stable ids ``{run_id}-{index}``.

    Malformed completions are retried per slot up to the retry cap and then
    recorded in the skip report rather than failing the run.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if gtype not in APPLICABLE_PAIRS:
        raise ValueError(f"{gtype.value} does not generate evaluable concepts")
    prompt = assemble_prompt(spec, gtype)
    base_request = CompletionRequest(
        model_id=model_id,
        prompt=prompt,
        max_tokens=max_tokens,
        temperature=temperature,
        stop=(COMPLETION_STOP,),
        n=n,
    )
    texts = gateway.complete(base_request)
    concepts: list[GeneratedConcept] = []
    skipped: list[SkippedSlot] = []
    for index, text in enumerate(texts, start=1):
        reasons: list[str] = []
        parsed: tuple[str, str] | None = None
        attempt_text = text
        for attempt in range(retry_cap + 1):
            try:
                parsed = parse_generation(attempt_text)
                break
            except (MalformedMarkup, EmptyBlock) as exc:
                reasons.append(str(exc))
                if attempt == retry_cap:
                    break
            retry_request = CompletionRequest(
                model_id=model_id,
                prompt=prompt,
                max_tokens=max_tokens,
                temperature=temperature,
                stop=(COMPLETION_STOP,),
                n=1,
            )
            attempt_text = gateway.complete(retry_request)[0]
        if parsed is None:
            skipped.append(SkippedSlot(index, tuple(reasons)))
            continue
        bio, inno = parsed
        concepts.append(
            GeneratedConcept(
                concept_id=f"{run_id}-{index}",
                gtype=gtype,
                spec=spec,
                biomimicry=bio,
                innovation=inno,
                raw=attempt_text,
                model_id=model_id,
            )
        )
    if not concepts:
        raise AllMalformed([r for slot in skipped for r in slot.reasons])
    return concepts, skipped


def _domain_a_text(concept: GeneratedConcept, pair: EvaluatorPair) -> str:
    if pair is EvaluatorPair.BENEFITS_INNOVATION:
        return ", ".join(concept.spec.benefits)
    if pair is EvaluatorPair.CHALLENGE_INNOVATION:
        return concept.spec.challenge
    return concept.biomimicry


def evaluate_concept(
    gateway: Gateway,
    concept: GeneratedConcept,
    evaluator_models: Mapping[EvaluatorPair, str],
    threshold: float = 0.5,
) -> ConceptEvaluation:
    """Run every evaluator applicable to the concept's type. A pair passes
    iff the verdict is Related with confidence >= threshold; overall is the
    conjunction of the per-pair passes."""
    if not 0.5 <= threshold < 1.0:
        raise ValueError(f"threshold must be in [0.5, 1), got {threshold}")
    verdicts: dict[EvaluatorPair, Verdict] = {}
    passed: dict[EvaluatorPair, bool] = {}
    for pair in APPLICABLE_PAIRS[concept.gtype]:
        model_id = evaluator_models.get(pair)
        if not model_id:
            raise MissingEvaluatorModel(pair)
        text = mark(_domain_a_text(concept, pair), pair.tag_a) + mark(
            concept.innovation, TAG_INNO
        )
        verdict = gateway.classify(model_id, text, pair)
        verdicts[pair] = verdict
        passed[pair] = verdict.label is Label.RELATED and verdict.confidence >= threshold
    return ConceptEvaluation(
        concept_id=concept.concept_id,
        gtype=concept.gtype,
        verdicts=verdicts,
        passed=passed,
        overall=all(passed.values()),
    )


def aggregate(evaluations: Sequence[ConceptEvaluation]) -> PassRateTable:
    """Fold evaluations of one generator type into a pass-rate row."""
    if not evaluations:
        raise EmptyInput("no evaluations to aggregate")
    gtypes = {e.gtype for e in evaluations}
    if len(gtypes) > 1:
        raise MixedTypes(f"mixed generator types: {sorted(t.value for t in gtypes)}")
    gtype = evaluations[0].gtype
    problem_pair = next((p for p in APPLICABLE_PAIRS[gtype] if p in PROBLEM_PAIRS), None)
    row = PassRateRow(
        gtype=gtype,
        total=len(evaluations),
        problem_pair=problem_pair,
        problem_passed=sum(1 for e in evaluations if problem_pair and e.passed.get(problem_pair)),
        nature_passed=sum(1 for e in evaluations if e.passed.get(EvaluatorPair.BIO_INNOVATION)),
        overall_passed=sum(1 for e in evaluations if e.overall),
    )
    return PassRateTable(rows={gtype: row})


def measure_accuracy(gateway: Gateway, model_id: str, labeled) -> float:
    """Fraction of labeled examples the classifier gets right (argmax, no
    threshold). The evaluator pair is inferred from each example's tags."""
    from .prompt_forge import infer_pair

    labeled = list(labeled)
    if not labeled:
        raise EmptyInput("no labeled examples")
    correct = 0
    for example in labeled:
        pair = infer_pair(example.text)
        verdict = gateway.classify(model_id, example.text, pair)
        if verdict.label is example.label:
            correct += 1
    return correct / len(labeled)
