import json

import pytest

from bidforge.corpus import Corpus
from bidforge.errors import (
    EmptyOutput,
    ExemplarCountError,
    InsufficientNegatives,
    MissingField,
)
from bidforge.markup import parse_marked
from bidforge.prompt_forge import (
    COMPLETION_STOP,
    PROMPT_SEPARATOR,
    EvaluatorPair,
    GeneratorType,
    Label,
    build_evaluator_dataset,
    build_generator_dataset,
    compute_batch_size,
    infer_pair,
    negative_nonbio_request,
    negative_solution_request,
    read_training_file,
    render_generator_example,
    serialize_training_file,
)

from conftest import make_corpus, make_record


def strip_completion(completion: str) -> str:
    assert completion.startswith(" ")
    assert completion.endswith(COMPLETION_STOP)
    return completion[1 : -len(COMPLETION_STOP)]


def test_type1_example_bytes(sample_corpus_path):
    from bidforge.corpus import load_corpus

    record = load_corpus(sample_corpus_path).records[0]  # the octopus gripper
    example = render_generator_example(record, GeneratorType.TYPE1)
    assert example.prompt == "Applications: robotic manipulator, warehouse automation" + PROMPT_SEPARATOR
    assert "[Bio]Octopus tentacles have suckers" in example.completion
    assert "[/Bio][Inno]The soft manipulator was inspired" in example.completion
    blocks = parse_marked(strip_completion(example.completion))
    assert set(blocks) == {"Bio", "Inno"}
    assert blocks["Bio"] == record.biomimicry
    assert blocks["Inno"] == record.innovation


def test_type2_prompt_renders_both_lines():
    record = make_record(1)
    example = render_generator_example(record, GeneratorType.TYPE2)
    benefits_line, applications_line = example.prompt[: -len(PROMPT_SEPARATOR)].split("\n")
    assert benefits_line == "Benefits: " + ", ".join(record.benefits)
    assert applications_line == "Applications: " + ", ".join(record.applications)


def test_type2_requires_benefits():
    record = make_record(1, benefits=())
    with pytest.raises(MissingField) as err:
        render_generator_example(record, GeneratorType.TYPE2)
    assert err.value.field == "benefits"


def test_type3_prompt_uses_challenge():
    record = make_record(2)
    example = render_generator_example(record, GeneratorType.TYPE3)
    assert example.prompt == f"Challenge: {record.challenge}" + PROMPT_SEPARATOR


def test_neggen_emits_inno_only():
    example = render_generator_example(make_record(3), GeneratorType.NEGGEN)
    blocks = parse_marked(strip_completion(example.completion))
    assert set(blocks) == {"Inno"}


def test_generator_dataset_counts_and_skips():
    records = [make_record(i) for i in range(8)]
    for i in (2, 5, 6):
        records[i] = make_record(i, benefits=())
    corpus = Corpus(records=tuple(records), source_path="<memory>")
    type1, skipped1 = build_generator_dataset(corpus, GeneratorType.TYPE1)
    assert len(type1) == 8 and not skipped1
    type2, skipped2 = build_generator_dataset(corpus, GeneratorType.TYPE2)
    assert len(type2) == 5
    assert sorted(s.record_id for s in skipped2) == ["rec-002", "rec-005", "rec-006"]
    assert all("benefits" in s.reason for s in skipped2)


def test_generator_dataset_deterministic(corpus10):
    first, _ = build_generator_dataset(corpus10, GeneratorType.TYPE3)
    second, _ = build_generator_dataset(corpus10, GeneratorType.TYPE3)
    assert first == second


def test_generator_dataset_empty_output():
    corpus = make_corpus(3, benefits=())
    with pytest.raises(EmptyOutput):
        build_generator_dataset(corpus, GeneratorType.TYPE2)


def _negatives(n):
    return [f"A plain machined bracket variant {i} with no biology involved." for i in range(n)]


def test_evaluator_dataset_balanced(corpus10):
    examples, skipped = build_evaluator_dataset(
        corpus10, EvaluatorPair.BIO_INNOVATION, _negatives(10), seed=1
    )
    assert not skipped
    assert len(examples) == 20
    labels = [e.label for e in examples]
    assert labels.count(Label.RELATED) == labels.count(Label.UNRELATED) == 10
    by_record = {r.innovation: r for r in corpus10}
    for example in examples:
        blocks = parse_marked(example.text)
        assert set(blocks) == {"Bio", "Inno"}
        if example.label is Label.RELATED:
            record = by_record[blocks["Inno"]]
            assert blocks["Bio"] == record.biomimicry
        else:
            assert blocks["Inno"] not in by_record  # negative B never a positive B


def test_evaluator_dataset_challenge_pair_sides(corpus10):
    examples, _ = build_evaluator_dataset(
        corpus10, EvaluatorPair.CHALLENGE_INNOVATION, _negatives(10), seed=0
    )
    blocks = parse_marked(examples[0].text)
    assert set(blocks) == {"Cha", "Inno"}
    assert blocks["Cha"] == corpus10.records[0].challenge
    assert blocks["Inno"] == corpus10.records[0].innovation


def test_negative_never_equals_own_positive():
    corpus = make_corpus(6)
    # poison the pool with every record's own innovation plus spares
    pool = [r.innovation for r in corpus] + _negatives(6)
    for seed in range(10):
        examples, _ = build_evaluator_dataset(
            corpus, EvaluatorPair.BIO_INNOVATION, pool, seed=seed
        )
        for record, example in zip(corpus, examples[1::2]):
            assert example.label is Label.UNRELATED
            assert parse_marked(example.text)["Inno"] != record.innovation


def test_insufficient_negatives_without_replacement():
    corpus = make_corpus(5)
    with pytest.raises(InsufficientNegatives):
        build_evaluator_dataset(
            corpus, EvaluatorPair.BIO_INNOVATION, _negatives(2), seed=0, allow_replacement=False
        )


def test_small_pool_with_replacement():
    corpus = make_corpus(5)
    examples, _ = build_evaluator_dataset(
        corpus, EvaluatorPair.BIO_INNOVATION, _negatives(2), seed=0
    )
    assert len(examples) == 10


def test_pool_exhausted_when_everything_matches_own():
    corpus = make_corpus(1)
    own = corpus.records[0].innovation
    with pytest.raises(InsufficientNegatives):
        build_evaluator_dataset(corpus, EvaluatorPair.BIO_INNOVATION, [own], seed=0)


@pytest.mark.parametrize(
    "n,expected",
    [(221, 1), (1000, 2), (1, 1), (499, 1), (1250, 3), (250, 1)],
)
def test_compute_batch_size(n, expected):
    assert compute_batch_size(n) == expected


def test_compute_batch_size_rejects_zero():
    with pytest.raises(ValueError):
        compute_batch_size(0)


def test_training_file_roundtrip(tmp_path, corpus10):
    examples, _ = build_generator_dataset(corpus10, GeneratorType.TYPE1)
    path = tmp_path / "train.jsonl"
    serialize_training_file(examples, path)
    assert read_training_file(path) == examples
    # byte determinism
    first = path.read_bytes()
    serialize_training_file(examples, path)
    assert path.read_bytes() == first


def test_serialize_rejects_empty(tmp_path):
    with pytest.raises(EmptyOutput):
        serialize_training_file([], tmp_path / "x.jsonl")


def test_labeled_serialization(tmp_path, corpus10):
    examples, _ = build_evaluator_dataset(
        corpus10, EvaluatorPair.BENEFITS_INNOVATION, _negatives(10), seed=3
    )
    path = tmp_path / "cls.jsonl"
    serialize_training_file(examples, path)
    rows = [json.loads(line) for line in path.read_text().splitlines()]
    assert all(row["completion"] in (" related", " unrelated") for row in rows)
    assert all(row["prompt"].endswith(PROMPT_SEPARATOR) for row in rows)


def test_negative_solution_request_renders_applications_only():
    request = negative_solution_request(["flying car"], "neg-model")
    assert request.prompt == "Applications: flying car" + PROMPT_SEPARATOR
    assert "Benefits" not in request.prompt and "Challenge" not in request.prompt
    assert request.stop == (COMPLETION_STOP,)


def test_negative_solution_request_requires_applications():
    with pytest.raises(MissingField):
        negative_solution_request([], "neg-model")


def test_nonbio_request_contains_exemplars_in_order():
    exemplars = [f"Exemplar text number {i}." for i in range(5)]
    request = negative_nonbio_request(exemplars, "davinci")
    positions = [request.prompt.find(e) for e in exemplars]
    assert all(p != -1 for p in positions)
    assert positions == sorted(positions)
    assert request.prompt.rstrip().endswith("Innovation:")


def test_nonbio_request_rejects_wrong_count():
    with pytest.raises(ExemplarCountError):
        negative_nonbio_request(["a", "b", "c", "d"], "davinci")


def test_infer_pair():
    assert infer_pair("[Ben]x[/Ben][Inno]y[/Inno]") is EvaluatorPair.BENEFITS_INNOVATION
    assert infer_pair("[Cha]x[/Cha][Inno]y[/Inno]") is EvaluatorPair.CHALLENGE_INNOVATION
    assert infer_pair("[Bio]x[/Bio][Inno]y[/Inno]") is EvaluatorPair.BIO_INNOVATION
    with pytest.raises(MissingField):
        infer_pair("[Foo]x[/Foo][Inno]y[/Inno]")
