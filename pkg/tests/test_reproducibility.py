"""Determinism guarantees that span processes, threads, and manifests."""

import json
import subprocess
import sys
from concurrent.futures import ThreadPoolExecutor

from bidforge.artifacts import CONCEPTS_FILE, MANIFEST_FILE, read_manifest
from bidforge.cli import main
from bidforge.llm_gateway import Gateway, MockBackend

from test_gateway import _request

_SNIPPET = """
from bidforge.llm_gateway import Gateway, MockBackend, CompletionRequest
request = CompletionRequest(model_id="mock:bio-inno:x", prompt="Applications: drone\\n\\n###\\n\\n",
                            n=3, stop=("\\n[END]",))
for text in Gateway(MockBackend(seed=11)).complete(request):
    print(repr(text))
"""


def test_mock_deterministic_across_processes():
    runs = [
        subprocess.run(
            [sys.executable, "-c", _SNIPPET], capture_output=True, text=True, check=True
        ).stdout
        for _ in range(2)
    ]
    assert runs[0] == runs[1]
    assert "[Bio]" in runs[0]


def test_gateway_shared_across_threads():
    gateway = Gateway(MockBackend(seed=2), max_in_flight=4)
    sequential = [gateway.complete(_request(prompt=f"Applications: item {i}\n\n###\n\n"))
                  for i in range(16)]
    with ThreadPoolExecutor(max_workers=8) as pool:
        threaded = list(
            pool.map(
                lambda i: gateway.complete(_request(prompt=f"Applications: item {i}\n\n###\n\n")),
                range(16),
            )
        )
    assert threaded == sequential


def test_manifest_replay_reproduces_concepts(tmp_path):
    first = tmp_path / "first"
    argv = ["generate", "--type", "2", "--applications", "flying car",
            "--benefits", "lightweight", "-n", "12", "--run-dir", str(first), "--seed", "9"]
    assert main(argv) == 0
    manifest = read_manifest(first / MANIFEST_FILE)

    replay_dir = tmp_path / "replay"
    replay_argv = [
        "generate",
        "--type", manifest["gtype"][-1],  # "type2" -> "2"
        "-n", str(manifest["n_requested"]),
        "--seed", str(manifest["seed"]),
        "--model", manifest["model_id"],
        "--run-dir", str(replay_dir),
    ]
    spec = manifest["spec"]
    if spec.get("applications"):
        replay_argv += ["--applications", ",".join(spec["applications"])]
    if spec.get("benefits"):
        replay_argv += ["--benefits", ",".join(spec["benefits"])]
    if spec.get("challenge"):
        replay_argv += ["--challenge", spec["challenge"]]
    assert main(replay_argv) == 0
    assert (replay_dir / CONCEPTS_FILE).read_bytes() == (first / CONCEPTS_FILE).read_bytes()
    assert (replay_dir / MANIFEST_FILE).read_bytes() == (first / MANIFEST_FILE).read_bytes()


def test_evaluate_uses_manifest_seed(tmp_path):
    run_dir = tmp_path / "run"
    assert main(["generate", "--type", "1", "--applications", "drone", "-n", "4",
                 "--run-dir", str(run_dir), "--seed", "13"]) == 0
    assert main(["evaluate", "--run-dir", str(run_dir)]) == 0
    evaluate_manifest = read_manifest(run_dir / "evaluate.toml")
    assert evaluate_manifest["seed"] == 13
    rows = [json.loads(line) for line in (run_dir / "evaluations.jsonl").read_text().splitlines()]
    assert len(rows) == 4
