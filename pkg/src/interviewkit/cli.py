"""Command line surface.

Exit codes: 0 success, 1 domain errors (invalid config, schema problems,
provider exhaustion), 2 usage errors. Diagnostics go to stderr; data goes
to files or stdout.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .config import AppConfig, load_config
from .errors import InterviewError, RunAlreadyComplete
from .gateway import Gateway, HttpTransport, ScriptedTransport
from .graph import build_context_graph, load_bundle, save_bundle
from .interview import (
    dossiers_from_journal,
    llm_entity_extractor,
    result_from_dossiers,
    run_evaluation,
)
from .journal import KIND_EXTRACTION, KIND_RUN_COMPLETE, Journal, recover
from .datasets import BenchmarkManifest, load_corpus_file, load_dataset, relabel_file
from .records import BatchDossier, Question, QuestionKind
from .report import emit_report, validation_row
from .sampling import sample_knowledge_path
from .similarity import LexicalNgramBackend
from .validation import (
    ValidationReport,
    load_stop_entities,
    related_questions,
    transfer_selector,
    validate_suggestions,
)


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False)


def _build_gateway(config: AppConfig, config_dir: Path) -> Gateway:
    if config.mock_script:
        script = config_dir / config.mock_script
        transport = ScriptedTransport.from_script_file(script)
        # mock runs use a frozen clock so journals are byte-stable
        return Gateway(transport, clock=None, sleep=lambda _s: None)
    return Gateway(HttpTransport(), clock=time.monotonic, sleep=time.sleep)


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def cmd_build_graph(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    config_dir = Path(args.config).resolve().parent
    gateway = _build_gateway(config, config_dir)
    corpus = load_corpus_file(args.corpus)
    journal_path = Path(args.out).with_suffix(Path(args.out).suffix + ".journal")

    cache = {}
    if args.resume and journal_path.exists():
        point = recover(journal_path)
        for entry in point.entries:
            if entry.kind == KIND_EXTRACTION and "chunk_id" in entry.payload:
                cache[entry.payload["chunk_id"]] = [
                    tuple(pair) for pair in entry.payload["entities"]
                ]

    with Journal(journal_path) as journal:
        extractor = llm_entity_extractor(gateway, config.endpoints.core, journal.append)

        def on_extraction(chunk, extracted) -> None:
            if chunk.chunk_id not in cache:
                journal.append(
                    KIND_EXTRACTION,
                    {"chunk_id": chunk.chunk_id, "entities": [list(pair) for pair in extracted]},
                )

        bundle = build_context_graph(
            corpus,
            extractor,
            config.chunk_policy,
            extraction_cache=cache or None,
            on_extraction=on_extraction,
        )
    save_bundle(bundle, args.out)
    print(
        f"graph written to {args.out}: {len(bundle.graph.nodes)} nodes, "
        f"{sum(len(v) for v in bundle.graph.edges.values()) // 2} edges, "
        f"{len(bundle.chunks)} chunks",
        file=sys.stderr,
    )
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    config_dir = Path(args.config).resolve().parent
    gateway = _build_gateway(config, config_dir)
    manifest = BenchmarkManifest.from_file(args.dataset)
    questions, _kb = load_dataset(manifest, Path(args.dataset).resolve().parent)
    bundle = load_bundle(args.graph)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    journal_path = out / "journal.log"
    if journal_path.exists() and not args.resume and not args.force:
        print(
            f"error: {journal_path} exists; pass --resume to continue or --force to restart",
            file=sys.stderr,
        )
        return 1
    if args.force and journal_path.exists():
        journal_path.unlink()

    with Journal(journal_path, resume=args.resume) as journal:
        result = run_evaluation(
            questions,
            bundle,
            gateway,
            config.endpoints,
            config.run,
            journal=journal,
        )

    _write(
        out / "dossiers.ndjson",
        "".join(_dumps(d.to_payload()) + "\n" for d in result.dossiers),
    )
    _write(out / "run_result.json", _dumps(result.to_payload()) + "\n")
    _write(out / "report.md", emit_report(result, config.run.difficulty))
    print(f"run complete: {result.totals.all} questions, score {result.global_score}", file=sys.stderr)
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    config_dir = Path(args.config).resolve().parent
    gateway = _build_gateway(config, config_dir)
    dossiers = []
    with Path(args.dossiers).open("r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                dossiers.append(BatchDossier.from_payload(json.loads(line)))

    selector_kwargs = {}
    if args.transfer:
        if not args.graph:
            print("error: --transfer requires --graph", file=sys.stderr)
            return 2
        bundle = load_bundle(args.graph)
        seed_questions = [r.question for d in dossiers for r in d.seed_records]
        stop = (
            load_stop_entities(config_dir / config.stop_entities_path)
            if config.stop_entities_path
            else None
        )
        related = related_questions(bundle.graph, seed_questions, stop)
        selector_kwargs["suggestion_for"] = transfer_selector(related, dossiers)

    report = validate_suggestions(
        dossiers,
        gateway,
        config.endpoints.target,
        policy=config.run.judge,
        trials=config.validation_trials,
        core_endpoint=config.endpoints.core,
        **selector_kwargs,
    )
    out = Path(args.out) if args.out else Path(args.dossiers).resolve().parent
    _write(out / "validation_report.json", _dumps(report.to_payload()) + "\n")
    print(validation_row(report))
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    config = load_config(args.config) if args.config else None
    point = recover(args.journal)
    dossiers = dossiers_from_journal(list(point.entries))
    if not dossiers:
        print("error: journal contains no completed batches", file=sys.stderr)
        return 1
    difficulty = config.run.difficulty if config else None
    if difficulty is None:
        from .difficulty import DifficultyConfig

        difficulty = DifficultyConfig.default()
    result = result_from_dossiers(dossiers, difficulty)
    validation = None
    if args.validation:
        payload = json.loads(Path(args.validation).read_text(encoding="utf-8"))
        validation = ValidationReport.from_payload(payload)
    out = Path(args.out) if args.out else Path(args.journal).resolve().parent
    _write(out / "report.md", emit_report(result, difficulty, validation))
    _write(out / "run_result.json", _dumps(result.to_payload()) + "\n")
    print(f"report written to {out / 'report.md'}", file=sys.stderr)
    return 0


def cmd_relabel(args: argparse.Namespace) -> int:
    count = relabel_file(args.infile, args.out, invert=args.invert)
    print(f"relabeled {count} questions", file=sys.stderr)
    return 0


def cmd_sample(args: argparse.Namespace) -> int:
    bundle = load_bundle(args.graph)
    probe = Question(
        id="sample-probe",
        text=args.seed_text,
        kind=QuestionKind.PHRASE_QA,
        gold_answer="",
    )
    path = sample_knowledge_path(
        bundle,
        [probe],
        hops=args.hops,
        rng_seed=args.rng_seed,
        backend=LexicalNgramBackend(),
        fanout=args.fanout,
    )
    for i, (entity, chunk_id) in enumerate(path.hops):
        print(f"hop {i}: entity={entity!r} chunk={chunk_id}")
    print("--- background ---")
    print(path.background_text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="interviewkit",
        description="Interview-style dynamic evaluation of language models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-graph", help="build the entity context graph from a corpus")
    p.add_argument("--corpus", required=True, help="ndjson corpus of {doc_id, text} rows")
    p.add_argument("--out", required=True, help="graph file to write")
    p.add_argument("--config", required=True, help="config file")
    p.add_argument("--resume", action="store_true", help="reuse journaled extractions")
    p.set_defaults(fn=cmd_build_graph)

    p = sub.add_parser("run", help="run grading, extension, and feedback over a dataset")
    p.add_argument("--dataset", required=True, help="benchmark manifest file")
    p.add_argument("--graph", required=True, help="graph file from build-graph")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--resume", action="store_true", help="resume from the journal")
    p.add_argument("--force", action="store_true", help="discard an existing journal")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("validate", help="measure suggestion effectiveness")
    p.add_argument("--dossiers", required=True, help="dossiers.ndjson from a run")
    p.add_argument("--config", required=True)
    p.add_argument("--transfer", action="store_true", help="use related-question suggestions")
    p.add_argument("--graph", help="graph file (required with --transfer)")
    p.add_argument("--out", help="output directory (default: next to dossiers)")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("report", help="regenerate reports from a journal")
    p.add_argument("--journal", required=True)
    p.add_argument("--config", help="config file (for difficulty gains)")
    p.add_argument("--validation", help="validation_report.json to include")
    p.add_argument("--out", help="output directory (default: next to journal)")
    p.set_defaults(fn=cmd_report)

    p = sub.add_parser("relabel", help="set difficulty labels from human accuracy")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--invert", action="store_true", help="swap easy and hard")
    p.set_defaults(fn=cmd_relabel)

    p = sub.add_parser("sample", help="print one knowledge path (debug aid)")
    p.add_argument("--graph", required=True)
    p.add_argument("--seed-text", required=True)
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--hops", type=int, default=3)
    p.add_argument("--fanout", type=int, default=5)
    p.set_defaults(fn=cmd_sample)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except RunAlreadyComplete as exc:
        print(f"error: run already complete in {exc}; use --force to restart", file=sys.stderr)
        return 1
    except InterviewError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
