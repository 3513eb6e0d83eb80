from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from bidforge.corpus import Corpus, InnovationRecord
from bidforge.llm_gateway import Choice, Gateway, MockBackend
from bidforge.transport_metrics import EmbeddingTable

SAMPLE_DIR = Path(__file__).resolve().parent.parent / "sample_data"

_CREATURE_WORDS = [
    "octopus", "kingfisher", "gecko", "burdock", "whale",
    "termite", "pufferfish", "hummingbird", "dragonfly", "lotus",
]


def make_record(i: int, *, benefits=None, **overrides) -> InnovationRecord:
    """Small valid record; creature i cycles through a fixed list so related
    texts share a distinctive token."""
    creature = _CREATURE_WORDS[i % len(_CREATURE_WORDS)]
    fields = dict(
        id=f"rec-{i:03d}",
        benefits=(f"benefit-{i}", "durable") if benefits is None else tuple(benefits),
        applications=(f"application-{i}", "drone"),
        challenge=f"Challenge {i}: the device must survive rough field conditions involving {creature} habitats.",
        innovation=f"Innovation {i}: the device copies the {creature} mechanism with a machined linkage.",
        biomimicry=f"The {creature} demonstrates a robust natural mechanism studied in sample {i}.",
    )
    fields.update(overrides)
    return InnovationRecord(**fields).normalized()


def make_corpus(n: int, **kwargs) -> Corpus:
    return Corpus(records=tuple(make_record(i, **kwargs) for i in range(n)), source_path="<memory>")


@pytest.fixture
def corpus10() -> Corpus:
    return make_corpus(10)


@pytest.fixture
def sample_corpus_path() -> Path:
    return SAMPLE_DIR / "corpus.jsonl"


@pytest.fixture
def mock_gateway() -> Gateway:
    return Gateway(MockBackend(seed=7))


class StubBackend:
    """Backend scripted by a handler(request, call_index) -> list[Choice].
    The handler may raise to exercise error paths."""

    name = "stub"

    def __init__(self, handler):
        self._handler = handler
        self.calls = []

    def complete(self, request):
        self.calls.append(request)
        return self._handler(request, len(self.calls) - 1)

    def create_fine_tune(self, training_file, base_model, epochs, batch_size):
        raise NotImplementedError

    def get_job(self, job_id):
        raise NotImplementedError


@pytest.fixture
def stub_backend_factory():
    return StubBackend


def logprob_choice(p_related: float, p_unrelated: float) -> Choice:
    import math

    from bidforge.prompt_forge import Label

    return Choice(
        text=Label.RELATED.token if p_related >= p_unrelated else Label.UNRELATED.token,
        top_logprobs={
            Label.RELATED.token: math.log(p_related),
            Label.UNRELATED.token: math.log(p_unrelated),
        },
    )


def random_table(words, dim: int, seed: int = 0) -> EmbeddingTable:
    rng = np.random.default_rng(seed)
    table = EmbeddingTable(dim=dim)
    for word in words:
        table.add(word, rng.normal(size=dim).astype(np.float32))
    return table
