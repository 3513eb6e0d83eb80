"""Uniform interface to completion-style model services.

Two backends sit behind one Gateway: a deterministic mock that lets the
entire pipeline run offline, and an HTTP client for completion-style APIs.
The gateway owns rate limiting, retry-with-backoff on RateLimited, fine-tune
idempotency, stop-sequence truncation, and single-token label classification.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import random
import re
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Mapping, Protocol, Sequence

from .errors import (
    BackendUnavailable,
    InvalidTrainingFile,
    MalformedMarkup,
    MissingFile,
    ModelNotFound,
    RateLimited,
    UnknownJob,
)
from .markup import parse_marked
from .prompt_forge import (
    PROMPT_SEPARATOR,
    TAG_INNO,
    EvaluatorPair,
    Label,
    compute_batch_size,
)

API_KEY_ENV = "BIDFORGE_API_KEY"
DEFAULT_EPOCHS = 4
_LOGPROB_FLOOR = -30.0


@dataclass(frozen=True)
class CompletionRequest:
    model_id: str
    prompt: str
    max_tokens: int = 400
    temperature: float = 0.8
    stop: tuple[str, ...] = ()
    n: int = 1
    logprobs: int | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


@dataclass(frozen=True)
class Choice:
    """One raw completion; top_logprobs covers the first sampled token."""

    text: str
    top_logprobs: Mapping[str, float] | None = None


class JobStatus(str, Enum):
    PENDING = "pending"
    RUNNING = "running"
    SUCCEEDED = "succeeded"
    FAILED = "failed"

    @property
    def terminal(self) -> bool:
        return self in (JobStatus.SUCCEEDED, JobStatus.FAILED)


@dataclass(frozen=True)
class FineTuneJob:
    job_id: str
    base_model: str
    training_file: str
    epochs: int
    batch_size: int
    status: JobStatus
    model_id: str | None = None  # set on success
    reason: str | None = None  # set on failure


@dataclass(frozen=True)
class Verdict:
    pair: EvaluatorPair
    label: Label
    confidence: float  # probability of the chosen label among the two label tokens


class Backend(Protocol):
    name: str

    def complete(self, request: CompletionRequest) -> list[Choice]: ...

    def create_fine_tune(
        self, training_file: Path, base_model: str, epochs: int, batch_size: int
    ) -> FineTuneJob: ...

    def get_job(self, job_id: str) -> FineTuneJob: ...


# --------------------------------------------------------------------------
# deterministic mock backend

_MOCK_BASE_MODELS = ("davinci", "curie", "babbage", "ada")
_MOCK_KINDS = ("bio-inno", "inno", "plain", "classifier")

_CREATURES = [
    ("hummingbird", "Hummingbirds hover in place by sweeping their wings in a figure-eight stroke that produces lift on both the down and the up beat."),
    ("kingfisher", "Kingfishers dive from air into water at high speed without a splash because their long tapered beak parts the surface gradually."),
    ("dragonfly", "Dragonflies drive four wings independently, letting them hover, dart sideways, and reverse without turning the body."),
    ("termite", "Termite mounds hold a steady internal temperature through a branching network of vents that drives passive airflow."),
    ("pufferfish", "Pufferfish deter predators by inflating an elastic body with water, growing several times larger without carrying permanent bulk."),
    ("shark", "Shark skin is covered in microscopic grooved denticles that cut drag by keeping the boundary flow attached."),
    ("whale", "Humpback whales turn inside surprisingly tight circles thanks to rows of tubercles along the leading edges of their flippers."),
    ("bat", "Bats fly with a thin elastic membrane stretched over lightweight finger bones, reshaping the whole wing on every stroke."),
    ("gecko", "Geckos cling to smooth vertical surfaces using millions of microscopic toe hairs that grip through van der Waals forces."),
    ("pterosaur", "Pterosaurs kept their enormous wings light with hollow bones stiffened by internal struts."),
    ("lotus", "Lotus leaves stay clean because a waxy microtexture makes water bead up and roll off, carrying dirt along."),
    ("burdock", "Burdock seed heads latch onto passing fur with a field of springy hooked bracts that let go under a firm steady pull."),
]
# token -> canonical creature name, singular and plural forms
_CREATURE_CANON: dict[str, str] = {}
for _name, _ in _CREATURES:
    _CREATURE_CANON[_name] = _name
    _CREATURE_CANON[_name + "s"] = _name
    if _name.endswith("y"):
        _CREATURE_CANON[_name[:-1] + "ies"] = _name

_MECHANISMS = (
    "a lattice of hollow ribs",
    "a shape-changing outer skin",
    "a folding strut assembly",
    "a micro-textured surface layer",
    "a segmented elastic membrane",
    "a vented honeycomb core",
)
_QUALITIES = ("weight", "drag", "fuel consumption", "structural complexity", "noise", "vibration")

_BIO_INNO_TEMPLATES = (
    "The {subject} adopts {mechanism} modeled on the {creature}, cutting {quality} without giving up strength.",
    "Inspired by the {creature}, the {subject} integrates {mechanism} so the design reduces {quality} while staying simple to build.",
    "The {subject} borrows the {creature} approach: {mechanism} that trims {quality} and improves handling in mixed conditions.",
)
_INNO_ONLY_TEMPLATES = (
    "The {subject} pairs {mechanism} with a simplified drivetrain to lower {quality} across the duty cycle.",
    "A reworked {subject} layout places {mechanism} around the payload bay, trading {quality} for serviceability.",
    "The {subject} combines {mechanism} and a common parts bin so upgrades do not add {quality}.",
)
_PLAIN_TEMPLATES = (
    "The {subject} uses a modular aluminum frame with quick-release joints so damaged sections swap out in the field.",
    "A compact controller coordinates the {subject} actuators and logs load data for later tuning.",
    "The {subject} relies on a redundant power bus and standardized couplings to keep maintenance simple.",
    "Sensors embedded along the {subject} chassis stream strain measurements to a scheduling service for predictive upkeep.",
)

_WORD_RE = re.compile(r"[a-z0-9]+")


def _subject_from_prompt(prompt: str) -> str:
    match = re.search(r"^Applications: (.+)$", prompt, re.MULTILINE)
    if match:
        return match.group(1).split(",")[0].strip() or "device"
    match = re.search(r"^Challenge: (.+)$", prompt, re.MULTILINE)
    if match:
        tokens = [t for t in re.findall(r"[A-Za-z]{3,}", match.group(1))][:2]
        if tokens:
            return " ".join(t.lower() for t in tokens)
    return "device"


def _benefit_from_prompt(prompt: str) -> str | None:
    match = re.search(r"^Benefits: (.+)$", prompt, re.MULTILINE)
    if match:
        return match.group(1).split(",")[0].strip() or None
    return None


def _content_tokens(text: str) -> set[str]:
    return {t for t in _WORD_RE.findall(text.lower()) if len(t) >= 4}


class MockBackend:
    """Referentially transparent stand-in for a completion service.

    Every completion is a pure function of (model_id, prompt, request index,
    seed), stable across processes. Model ids follow ``mock:<kind>[:salt]``
    with kinds bio-inno / inno / plain / classifier; the plain base model
    names are accepted too. Fine-tuning returns immediately with a synthetic
    model id derived from the training-file hash.
    """

    name = "mock"

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._jobs: dict[str, FineTuneJob] = {}

    # -- model id handling

    def _kind(self, model_id: str) -> str:
        if model_id in _MOCK_BASE_MODELS:
            return "plain"
        parts = model_id.split(":")
        if len(parts) >= 2 and parts[0] == "mock" and parts[1] in _MOCK_KINDS:
            return parts[1]
        raise ModelNotFound(model_id)

    def _rng(self, model_id: str, prompt: str, index: int) -> random.Random:
        key = f"{self.seed}\x1f{model_id}\x1f{prompt}\x1f{index}".encode()
        return random.Random(int.from_bytes(hashlib.sha256(key).digest()[:8], "big"))

    # -- completion

    def complete(self, request: CompletionRequest) -> list[Choice]:
        kind = self._kind(request.model_id)
        if request.logprobs and request.max_tokens == 1:
            return [self._classify_choice(request)]
        return [
            self._generate_choice(kind, request.model_id, request.prompt, i)
            for i in range(request.n)
        ]

    def _generate_choice(self, kind: str, model_id: str, prompt: str, index: int) -> Choice:
        rng = self._rng(model_id, prompt, index)
        subject = _subject_from_prompt(prompt)
        creature, bio_text = _CREATURES[rng.randrange(len(_CREATURES))]
        fills = {
            "subject": subject,
            "creature": creature,
            "mechanism": rng.choice(_MECHANISMS),
            "quality": rng.choice(_QUALITIES),
        }
        # a generator tuned on benefit-conditioned pairs echoes the benefit
        # often, but not reliably; same odds here so evaluators see both cases
        benefit = _benefit_from_prompt(prompt)
        benefit_clause = (
            f" The design keeps the result {benefit} in daily use."
            if benefit and rng.random() < 0.6
            else ""
        )
        if kind == "bio-inno":
            inno = rng.choice(_BIO_INNO_TEMPLATES).format(**fills) + benefit_clause
            text = f" [Bio]{bio_text}[/Bio][Inno]{inno}[/Inno]\n[END]"
        elif kind == "inno":
            inno = rng.choice(_INNO_ONLY_TEMPLATES).format(**fills) + benefit_clause
            text = f" [Inno]{inno}[/Inno]\n[END]"
        else:
            text = " " + rng.choice(_PLAIN_TEMPLATES).format(**fills)
        return Choice(text=text)

    def _classify_choice(self, request: CompletionRequest) -> Choice:
        """Relatedness heuristic: shared creature mentions dominate, token
        overlap otherwise, plus a small deterministic jitter."""
        prompt = request.prompt
        if prompt.endswith(PROMPT_SEPARATOR):
            prompt = prompt[: -len(PROMPT_SEPARATOR)]
        try:
            blocks = list(parse_marked(prompt).values())
        except Exception:
            blocks = [prompt[: len(prompt) // 2], prompt[len(prompt) // 2 :]]
        tokens_a = _content_tokens(blocks[0])
        tokens_b = _content_tokens(blocks[-1])
        jitter = self._rng(request.model_id, prompt, 0).uniform(-0.06, 0.06)
        creatures_a = {_CREATURE_CANON[t] for t in tokens_a if t in _CREATURE_CANON}
        creatures_b = {_CREATURE_CANON[t] for t in tokens_b if t in _CREATURE_CANON}
        if creatures_a & creatures_b:
            p_related = 0.9 + jitter * 0.5
        else:
            overlap = len(tokens_a & tokens_b) / max(1, min(len(tokens_a), len(tokens_b)))
            p_related = 0.22 + 2.5 * overlap + jitter
        p_related = min(0.97, max(0.03, p_related))
        label = Label.RELATED if p_related >= 0.5 else Label.UNRELATED
        return Choice(
            text=label.token,
            top_logprobs={
                Label.RELATED.token: math.log(p_related),
                Label.UNRELATED.token: math.log(1.0 - p_related),
            },
        )

    # -- fine-tuning

    def create_fine_tune(
        self, training_file: Path, base_model: str, epochs: int, batch_size: int
    ) -> FineTuneJob:
        if base_model not in _MOCK_BASE_MODELS:
            self._kind(base_model)  # raises ModelNotFound unless mock grammar
        data = Path(training_file).read_bytes()
        digest = hashlib.sha256(data).hexdigest()[:12]
        kind = _infer_file_kind(data)
        job = FineTuneJob(
            job_id=f"mockjob-{digest}",
            base_model=base_model,
            training_file=str(training_file),
            epochs=epochs,
            batch_size=batch_size,
            status=JobStatus.SUCCEEDED,
            model_id=f"mock:{kind}:ft-{digest}",
        )
        self._jobs[job.job_id] = job
        return job

    def get_job(self, job_id: str) -> FineTuneJob:
        try:
            return self._jobs[job_id]
        except KeyError:
            raise UnknownJob(job_id) from None


def _infer_file_kind(data: bytes) -> str:
    first = data.split(b"\n", 1)[0]
    try:
        completion = json.loads(first.decode("utf-8")).get("completion", "")
    except (ValueError, AttributeError):
        return "plain"
    if "[Bio]" in completion:
        return "bio-inno"
    if "[Inno]" in completion:
        return "inno"
    if completion.strip() in (Label.RELATED.value, Label.UNRELATED.value):
        return "classifier"
    return "plain"


# --------------------------------------------------------------------------
# HTTP backend for completion-style APIs

class RemoteBackend:
    """Client for completion-style HTTPS APIs (completions, file upload,
    fine-tune create/retrieve). The API key comes from the BIDFORGE_API_KEY
    environment variable unless given explicitly."""

    name = "remote"

    def __init__(self, base_url: str, api_key: str | None = None, timeout: float = 60.0, session=None):
        if session is None:
            import requests

            session = requests.Session()
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        self.timeout = timeout
        self._session = session

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return headers

    def _request(self, method: str, path: str, **kwargs):
        import requests

        url = f"{self.base_url}{path}"
        try:
            resp = self._session.request(
                method, url, timeout=self.timeout, headers=self._headers(), **kwargs
            )
        except requests.RequestException as exc:
            raise BackendUnavailable(f"{method} {url}: {exc}") from exc
        if resp.status_code == 429:
            retry_after = resp.headers.get("Retry-After")
            raise RateLimited(float(retry_after) if retry_after else None)
        if resp.status_code == 404:
            raise ModelNotFound(f"{method} {path}: {resp.text[:200]}")
        if resp.status_code >= 400:
            raise BackendUnavailable(f"{method} {path}: HTTP {resp.status_code} {resp.text[:200]}")
        return resp.json()

    def complete(self, request: CompletionRequest) -> list[Choice]:
        payload = {
            "model": request.model_id,
            "prompt": request.prompt,
            "max_tokens": request.max_tokens,
            "temperature": request.temperature,
            "n": request.n,
        }
        if request.stop:
            payload["stop"] = list(request.stop)
        if request.logprobs:
            payload["logprobs"] = request.logprobs
        body = self._request("POST", "/completions", json=payload)
        choices = []
        for raw in body.get("choices", []):
            top = None
            logprobs = raw.get("logprobs") or {}
            if logprobs.get("top_logprobs"):
                top = dict(logprobs["top_logprobs"][0])
            choices.append(Choice(text=raw.get("text", ""), top_logprobs=top))
        return choices

    def create_fine_tune(
        self, training_file: Path, base_model: str, epochs: int, batch_size: int
    ) -> FineTuneJob:
        with Path(training_file).open("rb") as fh:
            uploaded = self._request_files("/files", fh)
        body = self._request(
            "POST",
            "/fine-tunes",
            json={
                "training_file": uploaded["id"],
                "model": base_model,
                "n_epochs": epochs,
                "batch_size": batch_size,
            },
        )
        return self._job_from_body(body, str(training_file), epochs, batch_size, base_model)

    def _request_files(self, path: str, fh):
        import requests

        url = f"{self.base_url}{path}"
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = self._session.post(
                url,
                files={"file": fh},
                data={"purpose": "fine-tune"},
                headers=headers,
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise BackendUnavailable(f"POST {url}: {exc}") from exc
        if resp.status_code >= 400:
            raise BackendUnavailable(f"POST {path}: HTTP {resp.status_code}")
        return resp.json()

    def get_job(self, job_id: str) -> FineTuneJob:
        try:
            body = self._request("GET", f"/fine-tunes/{job_id}")
        except ModelNotFound:
            raise UnknownJob(job_id) from None
        return self._job_from_body(body, body.get("training_file", ""), 0, 0, body.get("model", ""))

    @staticmethod
    def _job_from_body(body, training_file, epochs, batch_size, base_model) -> FineTuneJob:
        status = JobStatus(body.get("status", "pending"))
        return FineTuneJob(
            job_id=body["id"],
            base_model=base_model,
            training_file=training_file,
            epochs=body.get("n_epochs", epochs),
            batch_size=body.get("batch_size", batch_size),
            status=status,
            model_id=body.get("fine_tuned_model"),
            reason=body.get("failure_reason"),
        )


# --------------------------------------------------------------------------
# rate limiting

class TokenBucket:
    """requests-per-minute limiter; acquire blocks until a token is free."""

    def __init__(self, per_minute: float, clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        self.rate = per_minute / 60.0
        self.capacity = max(1.0, per_minute / 60.0)
        self._tokens = self.capacity
        self._updated = clock()
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self._clock()
                self._tokens = min(self.capacity, self._tokens + (now - self._updated) * self.rate)
                self._updated = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self.rate
            self._sleep(wait)


# --------------------------------------------------------------------------
# gateway

class Gateway:
    """Shared front door: dispatching, retries, truncation, classification,
    idempotent fine-tune submission."""

    def __init__(
        self,
        backend: Backend,
        *,
        requests_per_minute: float | None = None,
        max_in_flight: int = 8,
        max_retries: int = 5,
        backoff_base: float = 0.5,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.backend = backend
        self._limiter = TokenBucket(requests_per_minute) if requests_per_minute else None
        self._in_flight = threading.BoundedSemaphore(max_in_flight)
        self._max_retries = max_retries
        self._backoff_base = backoff_base
        self._sleep = sleep
        self._ft_lock = threading.Lock()
        self._ft_jobs: dict[str, FineTuneJob] = {}

    # -- completion

    def complete(self, request: CompletionRequest) -> list[str]:
        """Request n completions; texts are truncated at the first stop
        sequence (stop excluded)."""
        choices = self._dispatch(request)
        return [_truncate(choice.text, request.stop) for choice in choices]

    def _dispatch(self, request: CompletionRequest) -> list[Choice]:
        delay = self._backoff_base
        for attempt in range(self._max_retries + 1):
            if self._limiter is not None:
                self._limiter.acquire()
            try:
                with self._in_flight:
                    return self.backend.complete(request)
            except RateLimited as exc:
                if attempt == self._max_retries:
                    raise
                self._sleep(exc.retry_after if exc.retry_after else delay)
                delay *= 2
        raise BackendUnavailable("retry loop exhausted")  # unreachable

    # -- fine-tuning

    def submit_fine_tune(
        self,
        training_file: str | Path,
        base_model: str,
        *,
        epochs: int = DEFAULT_EPOCHS,
        batch_size: int | None = None,
    ) -> FineTuneJob:
        """Validate the training file and submit once per (file bytes,
        hyperparameters): resubmitting the same work returns the cached job."""
        path = Path(training_file)
        n_examples = _validate_training_file(path)
        if batch_size is None:
            batch_size = compute_batch_size(n_examples)
        data = path.read_bytes()
        key = f"{hashlib.sha256(data).hexdigest()}|{base_model}|{epochs}|{batch_size}"
        with self._ft_lock:
            if key in self._ft_jobs:
                return self._ft_jobs[key]
            job = self.backend.create_fine_tune(path, base_model, epochs, batch_size)
            self._ft_jobs[key] = job
            return job

    def poll_job(self, job: FineTuneJob) -> FineTuneJob:
        """Refresh a job's status; terminal states are stable."""
        if job.status.terminal:
            return job
        return self.backend.get_job(job.job_id)

    # -- classification

    def classify(self, model_id: str, marked_text: str, pair: EvaluatorPair) -> Verdict:
        """One-token completion with label-token log-probabilities.
        Confidence is the chosen label's probability normalized over the two
        label tokens, so it always lands in [0.5, 1]."""
        blocks = parse_marked(marked_text)
        expected = {pair.tag_a, TAG_INNO}
        if set(blocks) != expected:
            raise MalformedMarkup(f"expected blocks {sorted(expected)}, got {sorted(blocks)}")
        request = CompletionRequest(
            model_id=model_id,
            prompt=marked_text + PROMPT_SEPARATOR,
            max_tokens=1,
            temperature=0.0,
            n=1,
            logprobs=5,
        )
        choice = self._dispatch(request)[0]
        top = choice.top_logprobs or {}
        p_related = math.exp(top.get(Label.RELATED.token, _LOGPROB_FLOOR))
        p_unrelated = math.exp(top.get(Label.UNRELATED.token, _LOGPROB_FLOOR))
        label = Label.RELATED if p_related >= p_unrelated else Label.UNRELATED
        confidence = max(p_related, p_unrelated) / (p_related + p_unrelated)
        return Verdict(pair=pair, label=label, confidence=confidence)


def _truncate(text: str, stops: Sequence[str]) -> str:
    cut = len(text)
    for stop in stops:
        idx = text.find(stop)
        if idx != -1:
            cut = min(cut, idx)
    return text[:cut]


def _validate_training_file(path: Path) -> int:
    if not path.is_file():
        raise MissingFile(str(path))
    count = 0
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                raise InvalidTrainingFile(line_no, "invalid JSON") from None
            if (
                not isinstance(obj, dict)
                or not isinstance(obj.get("prompt"), str)
                or not isinstance(obj.get("completion"), str)
            ):
                raise InvalidTrainingFile(line_no, "expected string keys prompt/completion")
            count += 1
    if count == 0:
        raise InvalidTrainingFile(0, "file has no examples")
    return count
