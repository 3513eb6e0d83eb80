"""Run configuration: a TOML file plus environment override for the API key.

Everything has a mock-backend default so the pipeline runs end to end with
no config file at all; a config is only required to point at a remote
backend, real model ids, or non-default paths.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import MissingFile
from .llm_gateway import Gateway, MockBackend, RemoteBackend
from .prompt_forge import EvaluatorPair, GeneratorType

# roles the pipeline needs a model id for
MODEL_ROLES = (
    GeneratorType.TYPE1.value,
    GeneratorType.TYPE2.value,
    GeneratorType.TYPE3.value,
    GeneratorType.NEGGEN.value,
    EvaluatorPair.BENEFITS_INNOVATION.value,
    EvaluatorPair.CHALLENGE_INNOVATION.value,
    EvaluatorPair.BIO_INNOVATION.value,
)

_DEFAULT_MOCK_MODELS = {
    GeneratorType.TYPE1.value: "mock:bio-inno:type1",
    GeneratorType.TYPE2.value: "mock:bio-inno:type2",
    GeneratorType.TYPE3.value: "mock:bio-inno:type3",
    GeneratorType.NEGGEN.value: "mock:inno:neggen",
    EvaluatorPair.BENEFITS_INNOVATION.value: "mock:classifier:ben",
    EvaluatorPair.CHALLENGE_INNOVATION.value: "mock:classifier:cha",
    EvaluatorPair.BIO_INNOVATION.value: "mock:classifier:bio",
}


@dataclass
class RunConfig:
    backend: str = "mock"
    mock_seed: int = 0
    base_url: str = ""
    requests_per_minute: float | None = None
    models: dict = field(default_factory=dict)
    temperature: float = 0.8
    max_tokens: int = 400
    threshold: float = 0.5
    seed: int = 7
    paths: dict = field(default_factory=dict)

    def model_for(self, role: str) -> str:
        if role in self.models:
            return self.models[role]
        if self.backend == "mock":
            return _DEFAULT_MOCK_MODELS[role]
        raise KeyError(f"no model configured for role {role!r}")

    def evaluator_models(self) -> dict[EvaluatorPair, str]:
        return {pair: self.model_for(pair.value) for pair in EvaluatorPair}


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    path = Path(path)
    if not path.is_file():
        raise MissingFile(str(path))
    with path.open("rb") as fh:
        data = tomllib.load(fh)
    config = RunConfig(
        backend=data.get("backend", "mock"),
        mock_seed=int(data.get("mock_seed", 0)),
        base_url=data.get("base_url", ""),
        requests_per_minute=data.get("requests_per_minute"),
        models=dict(data.get("models", {})),
        temperature=float(data.get("defaults", {}).get("temperature", 0.8)),
        max_tokens=int(data.get("defaults", {}).get("max_tokens", 400)),
        threshold=float(data.get("defaults", {}).get("threshold", 0.5)),
        seed=int(data.get("defaults", {}).get("seed", 7)),
        paths=dict(data.get("paths", {})),
    )
    if config.backend not in ("mock", "remote"):
        raise ValueError(f"backend must be 'mock' or 'remote', got {config.backend!r}")
    if config.backend == "remote" and not config.base_url:
        raise ValueError("remote backend needs base_url")
    return config


def make_gateway(config: RunConfig, mock_seed: int | None = None) -> Gateway:
    """Build the configured gateway; ``mock_seed`` overrides the config's
    seed so a command's --seed drives mock determinism."""
    if config.backend == "mock":
        backend = MockBackend(seed=config.mock_seed if mock_seed is None else mock_seed)
    else:
        backend = RemoteBackend(config.base_url)
    return Gateway(backend, requests_per_minute=config.requests_per_minute)
