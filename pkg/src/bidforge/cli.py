"""Command-line entry point.

Subcommands cover the whole workflow: ``prepare`` compiles training files,
``neggen`` produces negative-sample pools, ``finetune`` submits jobs,
``generate``/``evaluate``/``report`` run the concept pipeline into a run
directory, ``diversity`` scores innovation diversity against a reference,
and ``survey`` exports/imports/summarizes the human study.

Exit codes: 0 success, 1 I/O or backend failure, 2 validation failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import artifacts
from .concept_engine import (
    ProblemSpec,
    aggregate,
    evaluate_concept,
    generate_concepts,
)
from .config import load_config, make_gateway
from .corpus import load_corpus
from .errors import BidforgeError, ExemplarCountError
from .markup import parse_marked
from .prompt_forge import (
    TAG_INNO,
    EvaluatorPair,
    GeneratorType,
    build_evaluator_dataset,
    build_generator_dataset,
    compute_batch_size,
    negative_nonbio_request,
    negative_solution_request,
    serialize_training_file,
)
from .study_kit import (
    ExternalConcept,
    export_survey,
    import_scores,
    load_lexicon,
    load_survey_key,
    score_summary,
)
from .transport_metrics import (
    default_stopwords,
    diversity_report,
    load_embeddings,
    load_stopwords,
)

PAIR_FLAGS = {
    "ben": EvaluatorPair.BENEFITS_INNOVATION,
    "cha": EvaluatorPair.CHALLENGE_INNOVATION,
    "bio": EvaluatorPair.BIO_INNOVATION,
}
TYPE_FLAGS = {
    "1": GeneratorType.TYPE1,
    "2": GeneratorType.TYPE2,
    "3": GeneratorType.TYPE3,
}


def _write_json(path: Path, obj) -> None:
    path.write_text(
        json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
        newline="\n",
    )


def _read_string_lines(path: Path) -> list[str]:
    """One JSON-encoded string per line."""
    out = []
    for line in path.read_text("utf-8").splitlines():
        if line.strip():
            out.append(json.loads(line))
    return out


def _csv(value: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in value.split(",") if part.strip())


# --------------------------------------------------------------------------
# prepare

def cmd_prepare(args) -> int:
    corpus = load_corpus(args.corpus)
    out = Path(args.out)
    if args.role in ("generator", "neggen"):
        if args.role == "generator":
            if not args.type:
                raise ValueError("--type is required for --role generator")
            gtype = TYPE_FLAGS[args.type]
        else:
            gtype = GeneratorType.NEGGEN
        examples, skipped = build_generator_dataset(corpus, gtype)
        serialize_training_file(examples, out)
    else:
        if not args.pair:
            raise ValueError("--pair is required for --role evaluator")
        if not args.negatives:
            raise ValueError(
                "evaluator datasets need a negative pool: run "
                f"`bidforge neggen --pair {args.pair}` first, then pass --negatives"
            )
        pair = PAIR_FLAGS[args.pair]
        negatives = _read_string_lines(Path(args.negatives))
        examples, skipped = build_evaluator_dataset(corpus, pair, negatives, args.seed)
        serialize_training_file(examples, out)
    stats = {
        "examples": len(examples),
        "batch_size": compute_batch_size(len(examples)),
        "skipped": [{"record_id": s.record_id, "reason": s.reason} for s in skipped],
    }
    _write_json(Path(str(out) + ".stats.json"), stats)
    print(f"wrote {len(examples)} examples to {out} (batch_size={stats['batch_size']})")
    return 0


# --------------------------------------------------------------------------
# neggen: produce the negative-sample pool

def cmd_neggen(args) -> int:
    config = load_config(args.config)
    seed = args.seed if args.seed is not None else config.seed
    gateway = make_gateway(config, mock_seed=seed)
    pair = PAIR_FLAGS[args.pair]
    out = Path(args.out)
    texts: list[str] = []
    skipped = 0
    if pair is EvaluatorPair.BIO_INNOVATION:
        if not args.exemplars:
            raise ExemplarCountError(
                "the bio pair needs --exemplars: a file of exactly 5 "
                "biology-free innovation texts, one JSON string per line"
            )
        exemplars = _read_string_lines(Path(args.exemplars))
        count = args.count
        if not count and args.corpus:
            count = len(load_corpus(args.corpus))
        if not count:
            raise ValueError("--count (or --corpus to size the pool) is required")
        model = args.model or "davinci"
        request = negative_nonbio_request(exemplars, model, n=count)
        texts = [t.strip() for t in gateway.complete(request)]
    else:
        if not args.corpus:
            raise ValueError("--corpus is required for problem-side negatives")
        corpus = load_corpus(args.corpus)
        model = args.model or config.model_for(GeneratorType.NEGGEN.value)
        for record in corpus:
            request = negative_solution_request(
                record.applications,
                model,
                temperature=config.temperature,
                max_tokens=config.max_tokens,
            )
            raw = gateway.complete(request)[0]
            try:
                blocks = parse_marked(raw)
                texts.append(blocks[TAG_INNO].strip())
            except (BidforgeError, KeyError):
                skipped += 1
    if not texts:
        raise ValueError("no negative texts were produced")
    with out.open("w", encoding="utf-8", newline="\n") as fh:
        for text in texts:
            fh.write(json.dumps(text, ensure_ascii=False) + "\n")
    note = f" ({skipped} generations skipped)" if skipped else ""
    print(f"wrote {len(texts)} negatives to {out}{note}")
    return 0


# --------------------------------------------------------------------------
# finetune

def cmd_finetune(args) -> int:
    config = load_config(args.config)
    gateway = make_gateway(config)
    job = gateway.submit_fine_tune(
        args.file, args.base, epochs=args.epochs, batch_size=args.batch
    )
    while not job.status.terminal:
        time.sleep(args.poll_interval)
        job = gateway.poll_job(job)
    result = {
        "job_id": job.job_id,
        "status": job.status.value,
        "model_id": job.model_id,
        "base_model": job.base_model,
        "epochs": job.epochs,
        "batch_size": job.batch_size,
        "reason": job.reason,
    }
    if args.out:
        _write_json(Path(args.out), result)
    print(f"job {job.job_id}: {job.status.value}" + (f" -> {job.model_id}" if job.model_id else ""))
    return 0 if job.status.value == "succeeded" else 2


# --------------------------------------------------------------------------
# generate / evaluate / report

def cmd_generate(args) -> int:
    config = load_config(args.config)
    seed = args.seed if args.seed is not None else config.seed
    gateway = make_gateway(config, mock_seed=seed)
    gtype = TYPE_FLAGS[args.type]
    challenge = args.challenge or ""
    if args.challenge_file:
        challenge = Path(args.challenge_file).read_text("utf-8").strip()
    spec = ProblemSpec(
        applications=_csv(args.applications) if args.applications else (),
        benefits=_csv(args.benefits) if args.benefits else (),
        challenge=challenge,
    )
    model = args.model or config.model_for(gtype.value)
    run_id = f"{gtype.value}-s{seed}"
    concepts, skipped = generate_concepts(
        gateway,
        spec,
        gtype,
        args.n,
        model_id=model,
        run_id=run_id,
        temperature=config.temperature,
        max_tokens=config.max_tokens,
    )
    run_dir = Path(args.run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    artifacts.write_jsonl(
        run_dir / artifacts.CONCEPTS_FILE, [artifacts.concept_to_dict(c) for c in concepts]
    )
    manifest = {
        "command": "generate",
        "run_id": run_id,
        "gtype": gtype.value,
        "n_requested": args.n,
        "n_generated": len(concepts),
        "seed": seed,
        "model_id": model,
        "temperature": config.temperature,
        "max_tokens": config.max_tokens,
        "warnings": [f"slot {s.index}: {'; '.join(s.reasons)}" for s in skipped],
        "artifacts": [artifacts.CONCEPTS_FILE],
        "spec": {
            "applications": list(spec.applications),
            "benefits": list(spec.benefits),
            "challenge": spec.challenge,
        },
    }
    artifacts.write_manifest(run_dir / artifacts.MANIFEST_FILE, manifest)
    print(f"generated {len(concepts)}/{args.n} concepts into {run_dir}")
    return 0


def cmd_evaluate(args) -> int:
    config = load_config(args.config)
    run_dir = Path(args.run_dir)
    concepts_path = run_dir / artifacts.CONCEPTS_FILE
    if not concepts_path.is_file():
        raise ValueError(f"{run_dir} has no {artifacts.CONCEPTS_FILE}; run `bidforge generate` first")
    manifest = artifacts.read_manifest(run_dir / artifacts.MANIFEST_FILE)
    seed = args.seed if args.seed is not None else manifest.get("seed", config.seed)
    gateway = make_gateway(config, mock_seed=seed)
    threshold = args.threshold if args.threshold is not None else config.threshold
    concepts = [artifacts.concept_from_dict(obj) for obj in artifacts.read_jsonl(concepts_path)]
    models = config.evaluator_models()
    evaluations = [evaluate_concept(gateway, c, models, threshold) for c in concepts]
    artifacts.write_jsonl(
        run_dir / artifacts.EVALUATIONS_FILE,
        [artifacts.evaluation_to_dict(e) for e in evaluations],
    )
    artifacts.write_manifest(
        run_dir / "evaluate.toml",
        {
            "command": "evaluate",
            "threshold": threshold,
            "seed": seed,
            "n_evaluated": len(evaluations),
            "models": {pair.value: mid for pair, mid in sorted(models.items())},
        },
    )
    print(f"evaluated {len(evaluations)} concepts (threshold={threshold})")
    return 0


def cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    eval_path = run_dir / artifacts.EVALUATIONS_FILE
    if not eval_path.is_file():
        raise ValueError(f"{run_dir} has no evaluations; run `bidforge evaluate` first")
    evaluations = [artifacts.evaluation_from_dict(obj) for obj in artifacts.read_jsonl(eval_path)]
    if not evaluations:
        raise ValueError(f"{eval_path} is empty")
    by_type: dict = {}
    for evaluation in evaluations:
        by_type.setdefault(evaluation.gtype, []).append(evaluation)
    table = None
    for gtype in sorted(by_type, key=lambda g: g.value):
        part = aggregate(by_type[gtype])
        table = part if table is None else table.merge(part)
    _write_json(run_dir / artifacts.PASSRATES_FILE, artifacts.passrates_to_dict(table))
    report = artifacts.render_report(table)
    (run_dir / artifacts.REPORT_FILE).write_text(report, encoding="utf-8", newline="\n")
    print(report, end="")
    return 0


# --------------------------------------------------------------------------
# diversity

def cmd_diversity(args) -> int:
    if args.run_dir:
        concepts_path = Path(args.run_dir) / artifacts.CONCEPTS_FILE
    else:
        concepts_path = Path(args.concepts)
    concepts = [artifacts.concept_from_dict(obj) for obj in artifacts.read_jsonl(concepts_path)]
    reference = Path(args.reference).read_text("utf-8").strip()
    table = load_embeddings(args.embeddings, format=args.embeddings_format)
    stopwords = load_stopwords(args.stopwords) if args.stopwords else default_stopwords()
    report = diversity_report(concepts, reference, table, stopwords)
    out = Path(args.out) if args.out else (
        Path(args.run_dir) / "diversity.json" if args.run_dir else Path("diversity.json")
    )
    _write_json(out, report.to_dict())
    if args.csv:
        with Path(args.csv).open("w", encoding="utf-8", newline="\n") as fh:
            fh.write("concept_id,distance\n")
            for cid, dist in zip(report.concept_ids, report.distances):
                fh.write(f"{cid},{dist!r}\n")
    if report.distances:
        summary = report.summary
        print(
            f"{len(report.distances)} distances: mean={summary['mean']:.4f} "
            f"min={summary['min']:.4f} max={summary['max']:.4f} "
            f"({len(report.skipped)} skipped)"
        )
    else:
        print("no usable concepts")
    return 0


# --------------------------------------------------------------------------
# survey

def cmd_survey_export(args) -> int:
    if args.run_dir:
        concepts_path = Path(args.run_dir) / artifacts.CONCEPTS_FILE
    else:
        concepts_path = Path(args.concepts)
    concepts = [artifacts.concept_from_dict(obj) for obj in artifacts.read_jsonl(concepts_path)]
    if args.limit:
        concepts = concepts[: args.limit]
    benchmarks = []
    if args.benchmarks:
        for obj in artifacts.read_jsonl(Path(args.benchmarks)):
            benchmarks.append(
                ExternalConcept(
                    concept_id=obj["id"],
                    biomimicry=obj["biomimicry"],
                    innovation=obj["innovation"],
                )
            )
    export_survey(concepts, benchmarks, args.out)
    print(f"wrote survey with {len(concepts) + len(benchmarks)} items to {args.out}")
    return 0


def cmd_survey_import(args) -> int:
    records, rejected = import_scores(args.path)
    result = {
        "records": [
            {
                "concept_id": r.concept_id,
                "rater_id": r.rater_id,
                "feasibility": r.feasibility,
                "novelty": r.novelty,
            }
            for r in records
        ],
        "rejected": [
            {"source": r.source, "item": r.item, "reason": r.reason} for r in rejected
        ],
    }
    _write_json(Path(args.out), result)
    print(f"{len(records)} usable records, {len(rejected)} rejected")
    return 0


def cmd_survey_summarize(args) -> int:
    from .study_kit import ScoreRecord

    body = json.loads(Path(args.records).read_text("utf-8"))
    records = [
        ScoreRecord(
            concept_id=r["concept_id"],
            rater_id=r["rater_id"],
            feasibility=r["feasibility"],
            novelty=r["novelty"],
        )
        for r in body["records"]
    ]
    concept_index = load_survey_key(args.key)
    summary = score_summary(records, concept_index)
    _write_json(Path(args.out), summary.to_dict())
    for group, stats in summary.groups.items():
        print(
            f"{group}: n={stats['count']} feasibility={stats['mean_feasibility']:.2f} "
            f"novelty={stats['mean_novelty']:.2f}"
        )
    return 0


# --------------------------------------------------------------------------
# categorize (biological sources, lexicon-based)

def cmd_categorize(args) -> int:
    from .study_kit import category_distribution

    if args.run_dir:
        concepts_path = Path(args.run_dir) / artifacts.CONCEPTS_FILE
    else:
        concepts_path = Path(args.concepts)
    concepts = [artifacts.concept_from_dict(obj) for obj in artifacts.read_jsonl(concepts_path)]
    lexicon = load_lexicon(args.lexicon) if args.lexicon else load_lexicon()
    dist = category_distribution(concepts, lexicon)
    result = {"counts": dist.counts, "percentages": dist.percentages}
    if args.out:
        _write_json(Path(args.out), result)
    for name in sorted(dist.counts, key=lambda n: (-dist.counts[n], n)):
        if dist.counts[name]:
            print(f"{name}: {dist.counts[name]} ({dist.percentages[name]}%)")
    return 0


# --------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bidforge", description=__doc__)
    parser.add_argument("--config", help="TOML run configuration", default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="compile a fine-tuning dataset")
    p.add_argument("--role", choices=("generator", "evaluator", "neggen"), required=True)
    p.add_argument("--type", choices=tuple(TYPE_FLAGS), help="generator type")
    p.add_argument("--pair", choices=tuple(PAIR_FLAGS), help="evaluator pair")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--negatives", help="negative pool (JSON string per line)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("neggen", help="produce a negative-sample pool")
    p.add_argument("--pair", choices=tuple(PAIR_FLAGS), required=True)
    p.add_argument("--corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--exemplars", help="file of 5 biology-free innovation texts (bio pair)")
    p.add_argument("--count", type=int)
    p.add_argument("--model")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_neggen)

    p = sub.add_parser("finetune", help="submit a fine-tune job and wait")
    p.add_argument("--file", required=True)
    p.add_argument("--base", required=True)
    p.add_argument("--epochs", type=int, default=4)
    p.add_argument("--batch", type=int, default=None)
    p.add_argument("--poll-interval", type=float, default=5.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("generate", help="generate concepts into a run directory")
    p.add_argument("--type", choices=tuple(TYPE_FLAGS), required=True)
    p.add_argument("--applications")
    p.add_argument("--benefits")
    p.add_argument("--challenge")
    p.add_argument("--challenge-file")
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--run-dir", required=True)
    p.add_argument("--model")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="run correlation evaluators over a run")
    p.add_argument("--run-dir", required=True)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="aggregate pass rates for a run")
    p.add_argument("--run-dir", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("diversity", help="WMD diversity of innovations vs a reference")
    p.add_argument("--run-dir")
    p.add_argument("--concepts")
    p.add_argument("--reference", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--embeddings-format", choices=("text", "binary"), default="text")
    p.add_argument("--stopwords")
    p.add_argument("--out")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_diversity)

    p = sub.add_parser("categorize", help="biological-source category distribution")
    p.add_argument("--run-dir")
    p.add_argument("--concepts")
    p.add_argument("--lexicon")
    p.add_argument("--out")
    p.set_defaults(func=cmd_categorize)

    p = sub.add_parser("survey", help="human feasibility/novelty study")
    survey_sub = p.add_subparsers(dest="survey_command", required=True)

    sp = survey_sub.add_parser("export", help="write the blind survey file")
    sp.add_argument("--run-dir")
    sp.add_argument("--concepts")
    sp.add_argument("--benchmarks")
    sp.add_argument("--limit", type=int)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_survey_export)

    sp = survey_sub.add_parser("import", help="read back filled surveys")
    sp.add_argument("--path", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_survey_import)

    sp = survey_sub.add_parser("summarize", help="per-group score summary")
    sp.add_argument("--records", required=True)
    sp.add_argument("--key", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_survey_summarize)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (BidforgeError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
