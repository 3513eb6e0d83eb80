"""Exception types for the BID concept pipeline.

Contract-level failures get their own classes so callers can catch them
precisely. Plain argument misuse raises ValueError and genuine I/O failures
propagate as OSError; the CLI maps OSError-family errors to exit code 1 and
everything else here to exit code 2.
"""

from __future__ import annotations


class BidforgeError(Exception):
    """Base class for pipeline errors."""


class MissingFile(BidforgeError, FileNotFoundError):
    """A required input file does not exist."""


class ParseError(BidforgeError):
    """A structured input line could not be parsed."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class ValidationError(BidforgeError):
    """A record violates a corpus invariant."""

    def __init__(self, record_id: str, field: str, message: str):
        super().__init__(f"record {record_id!r}, field {field!r}: {message}")
        self.record_id = record_id
        self.field = field


class EmptyCorpus(BidforgeError):
    """The corpus contains no records."""


class MissingField(BidforgeError):
    """An operation needs a field the input does not provide."""

    def __init__(self, context: object, field: str):
        super().__init__(f"{getattr(context, 'value', context)}: missing field {field!r}")
        self.context = context
        self.field = field


class EmptyOutput(BidforgeError):
    """A dataset build produced no examples."""


class MalformedMarkup(BidforgeError):
    """Marker blocks are unclosed, nested, duplicated, or interleaved."""


class EmptyBlock(BidforgeError):
    """A marker block is present but blank."""

    def __init__(self, tag: str):
        super().__init__(f"block [{tag}] is empty")
        self.tag = tag


class InsufficientNegatives(BidforgeError):
    """The negative pool cannot cover the corpus without collisions."""


class ExemplarCountError(BidforgeError):
    """Few-shot exemplar count is not the required five."""


class BackendUnavailable(BidforgeError):
    """The completion backend cannot be reached or errored."""


class RateLimited(BidforgeError):
    """The backend asked us to slow down."""

    def __init__(self, retry_after: float | None = None):
        super().__init__(
            "rate limited" + (f", retry after {retry_after}s" if retry_after else "")
        )
        self.retry_after = retry_after


class ModelNotFound(BidforgeError):
    """The backend does not know the requested model id."""


class InvalidTrainingFile(BidforgeError):
    """A fine-tune training file has a malformed line."""

    def __init__(self, line_no: int, message: str = "malformed example"):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class UnknownJob(BidforgeError):
    """Fine-tune job id is not known to the backend."""


class AllMalformed(BidforgeError):
    """Every generated completion failed to parse."""

    def __init__(self, reasons: list[str]):
        super().__init__("all completions malformed: " + "; ".join(reasons[:5]))
        self.reasons = reasons


class EmptyInput(BidforgeError):
    """An aggregate was asked to summarize nothing."""


class MixedTypes(BidforgeError):
    """Aggregation input mixes generator types."""


class MissingEvaluatorModel(BidforgeError):
    """No model configured for an applicable evaluator pair."""

    def __init__(self, pair: object):
        super().__init__(f"no evaluator model for {getattr(pair, 'value', pair)}")
        self.pair = pair


class EmptyDocument(BidforgeError):
    """No tokens survive tokenization/vocabulary filtering."""


class FormatError(BidforgeError):
    """An embedding or survey file does not match its declared format."""

    def __init__(self, offset: int, message: str):
        super().__init__(f"offset {offset}: {message}")
        self.offset = offset


class DimensionMismatch(BidforgeError):
    """An embedding row has the wrong number of components."""

    def __init__(self, word: str, expected: int, got: int):
        super().__init__(f"word {word!r}: expected {expected} components, got {got}")
        self.word = word


class NumericalFailure(BidforgeError):
    """The transport solve left residuals above tolerance."""


class UnknownConcept(BidforgeError):
    """A score row references a concept id outside the survey key."""

    def __init__(self, concept_id: str):
        super().__init__(f"unknown concept id {concept_id!r}")
        self.concept_id = concept_id
