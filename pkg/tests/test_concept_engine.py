import pytest

from bidforge.concept_engine import (
    APPLICABLE_PAIRS,
    ConceptEvaluation,
    GeneratedConcept,
    ProblemSpec,
    aggregate,
    assemble_prompt,
    evaluate_concept,
    generate_concepts,
    measure_accuracy,
    parse_generation,
)
from bidforge.errors import (
    AllMalformed,
    EmptyBlock,
    EmptyInput,
    MalformedMarkup,
    MissingEvaluatorModel,
    MissingField,
    MixedTypes,
)
from bidforge.llm_gateway import Choice, Gateway, Verdict
from bidforge.prompt_forge import (
    PROMPT_SEPARATOR,
    EvaluatorPair,
    GeneratorType,
    Label,
    LabeledExample,
)

from conftest import StubBackend, logprob_choice

FLYING_SPEC = ProblemSpec(
    applications=("flying car",),
    benefits=("lightweight",),
    challenge="Lightweight design is a challenge for flying cars.",
)


def make_concept(gtype=GeneratorType.TYPE2, innovation="A car body shaped by gecko pads.", cid="c-1"):
    return GeneratedConcept(
        concept_id=cid,
        gtype=gtype,
        spec=FLYING_SPEC,
        biomimicry="Geckos cling to walls with microscopic toe hairs.",
        innovation=innovation,
        raw=f" [Bio]Geckos cling to walls with microscopic toe hairs.[/Bio][Inno]{innovation}[/Inno]",
        model_id="m",
    )


# -- prompts ------------------------------------------------------------------

def test_assemble_prompt_type1_bytes():
    prompt = assemble_prompt(ProblemSpec(applications=("flying car",)), GeneratorType.TYPE1)
    assert prompt == "Applications: flying car" + PROMPT_SEPARATOR


def test_assemble_prompt_type2_bytes():
    prompt = assemble_prompt(FLYING_SPEC, GeneratorType.TYPE2)
    assert prompt == "Benefits: lightweight\nApplications: flying car" + PROMPT_SEPARATOR


def test_assemble_prompt_matches_training_template():
    from bidforge.prompt_forge import render_generator_example

    from conftest import make_record

    record = make_record(4)
    spec = ProblemSpec(
        applications=record.applications,
        benefits=record.benefits,
        challenge=record.challenge,
    )
    for gtype in (GeneratorType.TYPE1, GeneratorType.TYPE2, GeneratorType.TYPE3):
        assert assemble_prompt(spec, gtype) == render_generator_example(record, gtype).prompt


def test_assemble_prompt_missing_field():
    with pytest.raises(MissingField):
        assemble_prompt(ProblemSpec(applications=("x",)), GeneratorType.TYPE3)


# -- parsing ------------------------------------------------------------------

def test_parse_generation_ok():
    assert parse_generation("[Bio]A[/Bio][Inno]B[/Inno]") == ("A", "B")


def test_parse_generation_missing_bio():
    with pytest.raises(MalformedMarkup):
        parse_generation("[Inno]B[/Inno]")


def test_parse_generation_empty_block():
    with pytest.raises(EmptyBlock) as err:
        parse_generation("[Bio] [/Bio][Inno]B[/Inno]")
    assert err.value.tag == "Bio"


# -- generation ---------------------------------------------------------------

def test_generate_concepts_mock(mock_gateway):
    concepts, skipped = generate_concepts(
        mock_gateway, FLYING_SPEC, GeneratorType.TYPE3, 50,
        model_id="mock:bio-inno:t3", run_id="run7",
    )
    assert len(concepts) == 50 and not skipped
    assert [c.concept_id for c in concepts][:3] == ["run7-1", "run7-2", "run7-3"]
    for concept in concepts:
        assert parse_generation(concept.raw) == (concept.biomimicry, concept.innovation)


def test_generate_rejects_bad_n(mock_gateway):
    with pytest.raises(ValueError):
        generate_concepts(mock_gateway, FLYING_SPEC, GeneratorType.TYPE1, 0,
                          model_id="m", run_id="r")


def test_generate_rejects_neggen(mock_gateway):
    with pytest.raises(ValueError):
        generate_concepts(mock_gateway, FLYING_SPEC, GeneratorType.NEGGEN, 1,
                          model_id="m", run_id="r")


def test_generate_all_malformed():
    backend = StubBackend(lambda req, i: [Choice(text="no blocks here")] * req.n)
    gateway = Gateway(backend)
    with pytest.raises(AllMalformed) as err:
        generate_concepts(gateway, FLYING_SPEC, GeneratorType.TYPE1, 2,
                          model_id="m", run_id="r", retry_cap=3)
    assert len(err.value.reasons) == 2 * (3 + 1)  # per-attempt reasons, both slots
    # initial batch + 3 retries per slot
    assert len(backend.calls) == 1 + 2 * 3


def test_generate_retry_recovers_slot():
    good = Choice(text=" [Bio]A creature.[/Bio][Inno]A device.[/Inno]\n[END]")
    bad = Choice(text="garbage")

    def handler(req, i):
        if i == 0:
            return [good, bad, good]
        return [good]

    gateway = Gateway(StubBackend(handler))
    concepts, skipped = generate_concepts(
        gateway, FLYING_SPEC, GeneratorType.TYPE1, 3, model_id="m", run_id="r"
    )
    assert [c.concept_id for c in concepts] == ["r-1", "r-2", "r-3"]
    assert not skipped


def test_generate_skip_report_for_stubborn_slot():
    good = Choice(text=" [Bio]A creature.[/Bio][Inno]A device.[/Inno]\n[END]")

    def handler(req, i):
        if i == 0:
            return [good, Choice(text="junk")]
        return [Choice(text="junk")]  # retries keep failing

    concepts, skipped = generate_concepts(
        Gateway(StubBackend(handler)), FLYING_SPEC, GeneratorType.TYPE1, 2,
        model_id="m", run_id="r", retry_cap=2,
    )
    assert [c.concept_id for c in concepts] == ["r-1"]
    assert len(skipped) == 1 and skipped[0].index == 2
    assert len(skipped[0].reasons) == 3  # initial + 2 retries


# -- evaluation ---------------------------------------------------------------

def classify_stub(confidences):
    """Backend whose verdict depends on the A-side tag of the marked prompt."""

    def handler(req, i):
        tag = req.prompt[1 : req.prompt.index("]")]
        p_rel = confidences[tag]
        return [logprob_choice(p_rel, 1.0 - p_rel)]

    return StubBackend(handler)


MODELS = {pair: f"model-{pair.value}" for pair in EvaluatorPair}


def test_type1_verdicts_only_bio():
    gateway = Gateway(classify_stub({"Bio": 0.9}))
    evaluation = evaluate_concept(gateway, make_concept(GeneratorType.TYPE1), MODELS)
    assert set(evaluation.verdicts) == {EvaluatorPair.BIO_INNOVATION}
    assert evaluation.overall is True


def test_type2_overall_conjunction_true():
    gateway = Gateway(classify_stub({"Bio": 0.9, "Ben": 0.9}))
    evaluation = evaluate_concept(gateway, make_concept(GeneratorType.TYPE2), MODELS)
    assert set(evaluation.verdicts) == {
        EvaluatorPair.BENEFITS_INNOVATION,
        EvaluatorPair.BIO_INNOVATION,
    }
    assert evaluation.overall is True


def test_type3_overall_conjunction_false():
    gateway = Gateway(classify_stub({"Bio": 0.9, "Cha": 0.2}))
    evaluation = evaluate_concept(gateway, make_concept(GeneratorType.TYPE3), MODELS)
    assert evaluation.passed[EvaluatorPair.BIO_INNOVATION] is True
    assert evaluation.passed[EvaluatorPair.CHALLENGE_INNOVATION] is False
    assert evaluation.overall is False


def test_missing_evaluator_model():
    gateway = Gateway(classify_stub({"Bio": 0.9}))
    with pytest.raises(MissingEvaluatorModel):
        evaluate_concept(gateway, make_concept(GeneratorType.TYPE1), {})


def test_threshold_validation():
    gateway = Gateway(classify_stub({"Bio": 0.9}))
    for threshold in (0.4, 1.0):
        with pytest.raises(ValueError):
            evaluate_concept(gateway, make_concept(GeneratorType.TYPE1), MODELS, threshold)


def test_threshold_monotonicity():
    confidences = [0.55, 0.65, 0.75, 0.85, 0.95]
    concepts = [make_concept(GeneratorType.TYPE1, cid=f"c-{i}") for i in range(5)]

    def eval_at(threshold):
        passing = set()
        for concept, p in zip(concepts, confidences):
            gateway = Gateway(classify_stub({"Bio": p}))
            ev = evaluate_concept(gateway, concept, MODELS, threshold)
            if ev.overall:
                passing.add(concept.concept_id)
        return passing

    assert eval_at(0.7) <= eval_at(0.5)


def test_applicable_pairs_exact():
    assert APPLICABLE_PAIRS[GeneratorType.TYPE1] == (EvaluatorPair.BIO_INNOVATION,)
    assert APPLICABLE_PAIRS[GeneratorType.TYPE2] == (
        EvaluatorPair.BENEFITS_INNOVATION,
        EvaluatorPair.BIO_INNOVATION,
    )
    assert APPLICABLE_PAIRS[GeneratorType.TYPE3] == (
        EvaluatorPair.CHALLENGE_INNOVATION,
        EvaluatorPair.BIO_INNOVATION,
    )


# -- aggregation --------------------------------------------------------------

def synth_evaluation(i, gtype, problem_ok, nature_ok):
    pairs = APPLICABLE_PAIRS[gtype]
    passed = {}
    verdicts = {}
    for pair in pairs:
        ok = nature_ok if pair is EvaluatorPair.BIO_INNOVATION else problem_ok
        passed[pair] = ok
        verdicts[pair] = Verdict(
            pair=pair,
            label=Label.RELATED if ok else Label.UNRELATED,
            confidence=0.9,
        )
    return ConceptEvaluation(
        concept_id=f"e-{i}", gtype=gtype, verdicts=verdicts, passed=passed,
        overall=all(passed.values()),
    )


def test_aggregate_table4_style_rates():
    evaluations = [
        synth_evaluation(i, GeneratorType.TYPE3, problem_ok=i < 42, nature_ok=i < 43)
        for i in range(50)
    ]
    row = aggregate(evaluations).rows[GeneratorType.TYPE3]
    assert row.problem_solution_rate == 84
    assert row.nature_solution_rate == 86
    assert row.overall_passed == 42 and row.overall_rate == 84


def test_aggregate_type2_44_percent():
    evaluations = [
        synth_evaluation(i, GeneratorType.TYPE2, problem_ok=i < 22, nature_ok=True)
        for i in range(50)
    ]
    row = aggregate(evaluations).rows[GeneratorType.TYPE2]
    assert row.problem_solution_rate == 44
    assert row.nature_solution_rate == 100


def test_aggregate_all_passing():
    evaluations = [synth_evaluation(i, GeneratorType.TYPE1, True, True) for i in range(9)]
    row = aggregate(evaluations).rows[GeneratorType.TYPE1]
    assert row.problem_solution_rate is None
    assert row.nature_solution_rate == row.overall_rate == 100


def test_aggregate_permutation_invariant():
    evaluations = [
        synth_evaluation(i, GeneratorType.TYPE3, problem_ok=i % 2 == 0, nature_ok=i % 3 == 0)
        for i in range(30)
    ]
    forward = aggregate(evaluations)
    backward = aggregate(list(reversed(evaluations)))
    assert forward.rows == backward.rows


def test_aggregate_overall_at_most_min():
    evaluations = [
        synth_evaluation(i, GeneratorType.TYPE3, problem_ok=i % 2 == 0, nature_ok=i % 3 == 0)
        for i in range(30)
    ]
    row = aggregate(evaluations).rows[GeneratorType.TYPE3]
    assert row.overall_passed <= min(row.problem_passed, row.nature_passed)


def test_aggregate_errors():
    with pytest.raises(EmptyInput):
        aggregate([])
    mixed = [
        synth_evaluation(0, GeneratorType.TYPE1, True, True),
        synth_evaluation(1, GeneratorType.TYPE2, True, True),
    ]
    with pytest.raises(MixedTypes):
        aggregate(mixed)


# -- accuracy -----------------------------------------------------------------

def _accuracy_dataset(agreeing: bool):
    # shared creature token -> mock says Related; disjoint tokens -> Unrelated
    related_text = "[Bio]the gecko climbs smooth walls[/Bio][Inno]a gecko pad gripper[/Inno]"
    unrelated_text = "[Bio]the gecko climbs smooth walls[/Bio][Inno]a standard bolt tensioner[/Inno]"
    if agreeing:
        return [
            LabeledExample(related_text, Label.RELATED),
            LabeledExample(unrelated_text, Label.UNRELATED),
        ]
    return [
        LabeledExample(related_text, Label.UNRELATED),
        LabeledExample(unrelated_text, Label.RELATED),
    ]


def test_measure_accuracy_agreeing(mock_gateway):
    assert measure_accuracy(mock_gateway, "mock:classifier:x", _accuracy_dataset(True)) == 1.0


def test_measure_accuracy_inverted(mock_gateway):
    assert measure_accuracy(mock_gateway, "mock:classifier:x", _accuracy_dataset(False)) == 0.0


def test_measure_accuracy_empty(mock_gateway):
    with pytest.raises(EmptyInput):
        measure_accuracy(mock_gateway, "mock:classifier:x", [])
