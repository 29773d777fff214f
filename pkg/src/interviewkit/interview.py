"""The three-stage evaluation orchestrator.

Stage 1 grades the target on seed batches, stage 2 generates follow-up
questions with difficulty driven by the running score, stage 3 turns each
batch's Q&A history into a four-field suggestion. Everything a run does
is journaled in one total order, so a crashed run resumes to the same
bytes an uninterrupted run would have produced.

Suggestions never flow into stage 1/2 queries; only the validation
harness uses them.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Sequence

from .difficulty import (
    CapabilityState,
    DifficultyConfig,
    average_score,
    decide_difficulty,
    fold,
)
from .errors import (
    AnswerUnavailable,
    EmptyDataset,
    FeedbackFailed,
    GatewayError,
    GenerationFailed,
    MalformedJson,
    NoJsonFound,
    NoSeedEntities,
    ProviderExhausted,
    RunAlreadyComplete,
)
from .gateway import Gateway, ModelEndpoint, Transcript, answer_question, extract_json_payload
from .graph import GraphBundle, normalize_entity
from .journal import (
    KIND_BATCH_COMPLETE,
    KIND_EXTRACTION,
    KIND_RECORD,
    KIND_RUN_COMPLETE,
    KIND_TRANSCRIPT,
    Journal,
    JournalEntry,
)
from .prompts import render_entity_extraction, render_evaluation, render_generation
from .records import (
    NO_ANSWER_SENTINEL,
    BatchDossier,
    DifficultyLevel,
    EvaluationSuggestion,
    QaRecord,
    Question,
    QuestionKind,
    Stage,
)
from .sampling import DEFAULT_FANOUT, derive_seed, sample_knowledge_path
from .similarity import LexicalNgramBackend, SimilarityBackend
from .validation import JudgePolicy, check_answer

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ModelEndpoints:
    core: ModelEndpoint
    target: ModelEndpoint
    embedding: ModelEndpoint | None = None


@dataclass(frozen=True)
class RunConfig:
    """Run-level knobs; the defaults mirror the standard protocol of
    3-question batches and at most 3 extension rounds."""

    batch_capacity: int = 3
    max_extension_rounds: int = 3
    max_hops: int = 3
    fanout: int = DEFAULT_FANOUT
    rng_seed: int = 0
    difficulty: DifficultyConfig = field(default_factory=DifficultyConfig.default)
    judge: JudgePolicy = field(default_factory=JudgePolicy)

    def __post_init__(self) -> None:
        if self.batch_capacity < 1:
            raise ValueError("batch_capacity must be >= 1")
        if self.max_extension_rounds < 0:
            raise ValueError("max_extension_rounds must be >= 0")
        if self.max_hops < 1:
            raise ValueError("max_hops must be >= 1")


@dataclass(frozen=True)
class RunTotals:
    grading: int
    extension: int

    @property
    def all(self) -> int:
        return self.grading + self.extension

    def to_payload(self) -> dict:
        return {"grading": self.grading, "extension": self.extension}

    @classmethod
    def from_payload(cls, payload: dict) -> "RunTotals":
        return cls(grading=payload["grading"], extension=payload["extension"])


@dataclass(frozen=True)
class RunResult:
    """Every dossier plus the global difficulty-weighted score."""

    dossiers: tuple[BatchDossier, ...]
    global_score: Fraction
    totals: RunTotals

    def to_payload(self) -> dict:
        return {
            "global_score": f"{self.global_score.numerator}/{self.global_score.denominator}",
            "totals": self.totals.to_payload(),
            "batches": [d.batch_id for d in self.dossiers],
        }


def split_batches(dataset: Sequence[Question], batch_capacity: int) -> list[list[Question]]:
    """Consecutive slices of the dataset; the last batch may be smaller."""
    if not dataset:
        raise EmptyDataset("cannot batch an empty dataset")
    if batch_capacity < 1:
        raise ValueError("batch_capacity must be >= 1")
    return [
        list(dataset[i : i + batch_capacity])
        for i in range(0, len(dataset), batch_capacity)
    ]


AppendFn = Callable[[str, dict], None]


def _null_append(kind: str, payload: dict) -> None:
    return None


def _transcript_sink(append: AppendFn):
    def sink(transcript: Transcript) -> None:
        append(KIND_TRANSCRIPT, transcript.to_payload())

    return sink


def asked_difficulty_of(question: Question) -> DifficultyLevel:
    """Seed questions without a label are asked and scored as Medium."""
    return question.difficulty or DifficultyLevel.MEDIUM


def _parse_entity_payload(payload: dict) -> list[list[tuple[str, str]]]:
    """Per-sentence (text, type) pairs from an extraction response."""
    sentences = []
    for row in payload.get("labeled_data", []):
        pairs = []
        for item in row.get("entity_list", []):
            text = str(item.get("entity_text", "")).strip()
            if text:
                pairs.append((text, str(item.get("entity_type", ""))))
        sentences.append(pairs)
    return sentences


def llm_entity_extractor(
    gateway: Gateway,
    core_endpoint: ModelEndpoint,
    append: AppendFn = _null_append,
):
    """Chunk-level entity extractor backed by the core model.

    Raises on provider or parse failure so graph construction aborts
    rather than building a silently partial graph.
    """
    from .chunking import sentence_spans

    def extract(chunk) -> list[tuple[str, str]]:
        sentences = [chunk.text[s:e] for s, e in sentence_spans(chunk.text)]
        prompt = render_entity_extraction(sentences or [chunk.text])
        raw = gateway.complete(core_endpoint, prompt, sink=_transcript_sink(append))
        payload = extract_json_payload(raw)
        pairs = [pair for sentence in _parse_entity_payload(payload) for pair in sentence]
        return pairs

    return extract


def extract_batch_entities(
    batch: Sequence[Question],
    gateway: Gateway,
    core_endpoint: ModelEndpoint,
    append: AppendFn = _null_append,
) -> list[Question]:
    """Tag each question with its extracted entities, one call per batch.

    Questions already tagged are left alone. Extraction failure leaves
    tags empty; the sampler then falls back to raw question text.
    """
    pending = [q for q in batch if q.entity_tags is None]
    if not pending:
        return list(batch)
    prompt = render_entity_extraction([q.text for q in pending])
    tags_by_index: dict[int, frozenset[str]] = {}
    try:
        raw = gateway.complete(core_endpoint, prompt, sink=_transcript_sink(append))
        payload = extract_json_payload(raw)
        per_sentence = _parse_entity_payload(payload)
        for i, pairs in enumerate(per_sentence[: len(pending)]):
            tags_by_index[i] = frozenset(normalize_entity(text) for text, _ in pairs)
    except (ProviderExhausted, NoJsonFound, MalformedJson, AttributeError, TypeError) as exc:
        logger.warning("entity extraction failed for batch: %s", exc)
    tagged = []
    position = {id(q): i for i, q in enumerate(pending)}
    for question in batch:
        if question.entity_tags is not None:
            tagged.append(question)
        else:
            idx = position[id(question)]
            tagged.append(question.with_tags(tags_by_index.get(idx, frozenset())))
    append(
        KIND_EXTRACTION,
        {"tags": {q.id: sorted(q.entity_tags or ()) for q in tagged}},
    )
    return tagged


def grade_batch(
    batch: Sequence[Question],
    gateway: Gateway,
    endpoints: ModelEndpoints,
    config: RunConfig,
    append: AppendFn = _null_append,
) -> tuple[list[QaRecord], CapabilityState]:
    """Stage 1: ask every seed question once, judge, and fold the state."""
    sink = _transcript_sink(append)
    state = CapabilityState()
    records = []
    for question in batch:
        try:
            answer = answer_question(gateway, endpoints.target, question, sink=sink)
        except AnswerUnavailable:
            answer = NO_ANSWER_SENTINEL
        correct = answer != NO_ANSWER_SENTINEL and check_answer(
            question, answer, config.judge, gateway=gateway, core_endpoint=endpoints.core, sink=sink
        )
        record = QaRecord(
            question=question,
            asked_difficulty=asked_difficulty_of(question),
            model_answer=answer,
            correct=correct,
            stage=Stage.GRADING,
            round=0,
        )
        state = fold(state, record, config.difficulty)
        append(KIND_RECORD, record.to_payload())
        records.append(record)
    return records, state


def generate_extended_question(
    batch: Sequence[Question],
    bundle: GraphBundle,
    gateway: Gateway,
    core_endpoint: ModelEndpoint,
    difficulty: DifficultyLevel,
    hops: int,
    rng_seed: int,
    backend: SimilarityBackend,
    fanout: int = DEFAULT_FANOUT,
    append: AppendFn = _null_append,
) -> tuple[str, str, str]:
    """Stage 2 generation: sample a knowledge path and ask the core model
    for one question at the requested difficulty.

    Returns (question_text, gold_answer, background_text); raises
    GenerationFailed when sampling, the provider, or the parse fails.
    """
    try:
        path = sample_knowledge_path(bundle, batch, hops, rng_seed, backend, fanout)
    except NoSeedEntities as exc:
        raise GenerationFailed(str(exc)) from exc
    prompt = render_generation(path.background_text, difficulty)
    try:
        raw = gateway.complete(core_endpoint, prompt, sink=_transcript_sink(append))
        payload = extract_json_payload(raw)
    except (ProviderExhausted, NoJsonFound, MalformedJson) as exc:
        raise GenerationFailed(str(exc)) from exc
    generated = payload.get("generated_question") or []
    if not generated or "question" not in generated[0] or "answer" not in generated[0]:
        raise GenerationFailed("generated_question list empty or malformed")
    first = generated[0]
    return str(first["question"]), str(first["answer"]), path.background_text


def run_interactive_extension(
    batch: Sequence[Question],
    batch_id: str,
    seed_state: CapabilityState,
    bundle: GraphBundle,
    gateway: Gateway,
    endpoints: ModelEndpoints,
    config: RunConfig,
    batch_index: int,
    backend: SimilarityBackend,
    append: AppendFn = _null_append,
) -> tuple[list[QaRecord], CapabilityState]:
    """Stage 2: up to max_extension_rounds follow-up questions, with the
    difficulty recomputed from the full state after every answer.

    A failed generation skips its round: no record, no fold, and the
    remaining successful rounds stay consecutively numbered.
    """
    sink = _transcript_sink(append)
    state = seed_state
    records: list[QaRecord] = []
    asked = 0
    for attempt in range(1, config.max_extension_rounds + 1):
        difficulty = decide_difficulty(average_score(state, config.difficulty), config.difficulty)
        try:
            question_text, gold, background = generate_extended_question(
                batch,
                bundle,
                gateway,
                endpoints.core,
                difficulty,
                config.max_hops,
                derive_seed(config.rng_seed, batch_index, attempt),
                backend,
                config.fanout,
                append,
            )
        except GenerationFailed as exc:
            logger.warning("batch %s round %d generation skipped: %s", batch_id, attempt, exc)
            continue
        asked += 1
        question = Question(
            id=f"{batch_id}-ext{asked}",
            text=question_text,
            kind=QuestionKind.PHRASE_QA,
            gold_answer=gold,
            difficulty=difficulty,
            background=background,
        )
        try:
            answer = answer_question(
                gateway, endpoints.target, question, with_background=False, sink=sink
            )
        except AnswerUnavailable:
            answer = NO_ANSWER_SENTINEL
        correct = answer != NO_ANSWER_SENTINEL and check_answer(
            question, answer, config.judge, gateway=gateway, core_endpoint=endpoints.core, sink=sink
        )
        record = QaRecord(
            question=question,
            asked_difficulty=difficulty,
            model_answer=answer,
            correct=correct,
            stage=Stage.EXTENSION,
            round=asked,
        )
        state = fold(state, record, config.difficulty)
        append(KIND_RECORD, record.to_payload())
        records.append(record)
    return records, state


def evaluate_feedback(
    records: Sequence[QaRecord],
    gateway: Gateway,
    core_endpoint: ModelEndpoint,
    append: AppendFn = _null_append,
) -> EvaluationSuggestion:
    """Stage 3: turn the batch's full Q&A history into the four-field
    critique, without revealing any correct answer to the target."""
    if not records:
        raise FeedbackFailed("no records to evaluate")
    prompt = render_evaluation(list(records))
    try:
        raw = gateway.complete(core_endpoint, prompt, sink=_transcript_sink(append))
        payload = extract_json_payload(raw)
    except (ProviderExhausted, NoJsonFound, MalformedJson) as exc:
        raise FeedbackFailed(str(exc)) from exc
    required = (
        "flaws_knowledge",
        "flaws_capability",
        "comprehensive_performance",
        "suggestions",
    )
    if any(key not in payload for key in required):
        raise FeedbackFailed("suggestion object missing required fields")
    return EvaluationSuggestion(**{key: str(payload[key]) for key in required})


def process_batch(
    batch: Sequence[Question],
    batch_index: int,
    bundle: GraphBundle,
    gateway: Gateway,
    endpoints: ModelEndpoints,
    config: RunConfig,
    backend: SimilarityBackend,
    append: AppendFn = _null_append,
) -> BatchDossier:
    batch_id = f"batch-{batch_index:04d}"
    tagged = extract_batch_entities(batch, gateway, endpoints.core, append)
    seed_records, state = grade_batch(tagged, gateway, endpoints, config, append)
    extension_records, state = run_interactive_extension(
        tagged, batch_id, state, bundle, gateway, endpoints, config, batch_index, backend, append
    )
    all_records = seed_records + extension_records
    degraded = False
    try:
        suggestion = evaluate_feedback(all_records, gateway, endpoints.core, append)
    except FeedbackFailed as exc:
        logger.warning("batch %s feedback degraded: %s", batch_id, exc)
        suggestion = EvaluationSuggestion()
        degraded = True
    dossier = BatchDossier(
        batch_id=batch_id,
        seed_records=tuple(seed_records),
        extension_records=tuple(extension_records),
        suggestion=suggestion,
        final_avg_score=average_score(state, config.difficulty),
        degraded=degraded,
    )
    append(KIND_BATCH_COMPLETE, {"batch_index": batch_index, "dossier": dossier.to_payload()})
    return dossier


def _batch_score(dossier: BatchDossier, config: DifficultyConfig) -> tuple[Fraction, int]:
    total = Fraction(0)
    records = dossier.all_records()
    for record in records:
        if record.correct:
            total += config.gain_for(record.asked_difficulty)
    return total, len(records)


def result_from_dossiers(
    dossiers: Sequence[BatchDossier], config: DifficultyConfig
) -> RunResult:
    """Fold dossiers into the run result; the global score is total gains
    over total questions asked across all batches and stages."""
    score_sum = Fraction(0)
    n_total = 0
    grading = 0
    extension = 0
    for dossier in dossiers:
        batch_score, batch_n = _batch_score(dossier, config)
        score_sum += batch_score
        n_total += batch_n
        grading += len(dossier.seed_records)
        extension += len(dossier.extension_records)
    global_score = score_sum / n_total if n_total else Fraction(0)
    return RunResult(
        dossiers=tuple(dossiers),
        global_score=global_score,
        totals=RunTotals(grading=grading, extension=extension),
    )


def run_evaluation(
    dataset: Sequence[Question],
    bundle: GraphBundle,
    gateway: Gateway,
    endpoints: ModelEndpoints,
    config: RunConfig,
    journal: Journal | None = None,
    backend: SimilarityBackend | None = None,
) -> RunResult:
    """Run all three stages over every batch.

    With a journal opened in resume mode, completed batches are loaded
    from their batch-complete entries, the partially processed batch is
    replayed against its journaled transcripts, and processing continues
    live from there.
    """
    backend = backend or LexicalNgramBackend()
    batches = split_batches(dataset, config.batch_capacity)
    append: AppendFn = journal.append if journal is not None else _null_append

    dossiers: list[BatchDossier] = []
    start_index = 0
    if journal is not None and journal.replaying:
        pending = journal.pending_entries()
        if any(e.kind == KIND_RUN_COMPLETE for e in pending):
            raise RunAlreadyComplete(str(journal.path))
        prefix_len = 0
        for i, entry in enumerate(pending, start=1):
            if entry.kind == KIND_BATCH_COMPLETE:
                prefix_len = i
        completed = journal.fast_forward(prefix_len)
        for entry in completed:
            if entry.kind == KIND_BATCH_COMPLETE:
                dossiers.append(BatchDossier.from_payload(entry.payload["dossier"]))
        start_index = len(dossiers)
        gateway.preload_replay(
            [
                Transcript.from_payload(entry.payload)
                for entry in journal.pending_entries()
                if entry.kind == KIND_TRANSCRIPT
            ]
        )

    for batch_index in range(start_index, len(batches)):
        dossier = process_batch(
            batches[batch_index],
            batch_index,
            bundle,
            gateway,
            endpoints,
            config,
            backend,
            append,
        )
        dossiers.append(dossier)

    result = result_from_dossiers(dossiers, config.difficulty)
    append(KIND_RUN_COMPLETE, result.to_payload())
    return result


def dossiers_from_journal(entries: Sequence[JournalEntry]) -> list[BatchDossier]:
    return [
        BatchDossier.from_payload(entry.payload["dossier"])
        for entry in entries
        if entry.kind == KIND_BATCH_COMPLETE
    ]
