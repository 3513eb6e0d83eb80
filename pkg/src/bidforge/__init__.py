"""bidforge: a bio-inspired-design concept pipeline.

Compiles fine-tuning datasets from an innovation corpus, drives a
completion-style model backend (deterministic mock included) to generate
and classify design concepts, and scores concept diversity with an exact
Word Mover's Distance engine.
"""

__version__ = "0.1.0"

from .corpus import Corpus, InnovationRecord, SplitSpec, load_corpus, split_corpus
from .concept_engine import (
    GeneratedConcept,
    ProblemSpec,
    aggregate,
    evaluate_concept,
    generate_concepts,
    parse_generation,
)
from .llm_gateway import CompletionRequest, Gateway, MockBackend, RemoteBackend, Verdict
from .prompt_forge import (
    EvaluatorPair,
    GeneratorType,
    Label,
    LabeledExample,
    TrainingExample,
    build_evaluator_dataset,
    build_generator_dataset,
    compute_batch_size,
)
from .transport_metrics import (
    EmbeddingTable,
    NBowDoc,
    TransportProblem,
    load_embeddings,
    solve_transport,
    to_nbow,
    wmd,
)

__all__ = [
    "__version__",
    "Corpus",
    "InnovationRecord",
    "SplitSpec",
    "load_corpus",
    "split_corpus",
    "GeneratedConcept",
    "ProblemSpec",
    "aggregate",
    "evaluate_concept",
    "generate_concepts",
    "parse_generation",
    "CompletionRequest",
    "Gateway",
    "MockBackend",
    "RemoteBackend",
    "Verdict",
    "EvaluatorPair",
    "GeneratorType",
    "Label",
    "LabeledExample",
    "TrainingExample",
    "build_evaluator_dataset",
    "build_generator_dataset",
    "compute_batch_size",
    "EmbeddingTable",
    "NBowDoc",
    "TransportProblem",
    "load_embeddings",
    "solve_transport",
    "to_nbow",
    "wmd",
]
