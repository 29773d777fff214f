"""Answer correctness judging and the suggestion-effectiveness harness.

The harness re-asks every seed question twice, without and with the
batch's suggestion text, and reports before/after accuracy plus the two
transition rates. The counting identity acc2 - acc1 = cr - cte holds
exactly because the four counters partition the same transition table.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .errors import JudgeUnavailable, NoTransferableSuggestions
from .gateway import (
    Gateway,
    ModelEndpoint,
    TranscriptSink,
    answer_or_sentinel,
    extract_json_payload,
)
from .graph import ContextGraph, normalize_entity
from .prompts import render_judge
from .records import BatchDossier, Question, QuestionKind

_PUNCT = re.compile(r"[^\w\s]")
_WS = re.compile(r"\s+")
# leading decorated option labels: "B) text", "(b) text", "B. text", "b: text";
# the decoration mark is mandatory so option texts like "A tumor" don't match
_LABEL_DECORATION = re.compile(
    r"^\s*(?:\(\s*([A-Za-z0-9])\s*\)|([A-Za-z0-9])\s*[\).:])\s*(\S.*)?$", re.DOTALL
)


class JudgeMode(enum.Enum):
    EXACT_NORMALIZED = "exact_normalized"
    LLM_JUDGE = "llm_judge"


@dataclass(frozen=True)
class JudgePolicy:
    """How model answers are judged against gold answers.

    The default mode is deterministic normalization plus a containment
    rule for phrase answers; the LLM judge is an opt-in that delegates to
    the core model.
    """

    mode: JudgeMode = JudgeMode.EXACT_NORMALIZED


def normalize_answer(text: str) -> str:
    """Case-fold, strip punctuation, and collapse whitespace. Idempotent."""
    return _WS.sub(" ", _PUNCT.sub(" ", text.casefold())).strip()


def split_option_label(text: str) -> tuple[str | None, str]:
    """Leading decorated option label and the remainder, if present."""
    match = _LABEL_DECORATION.match(text)
    if not match:
        return None, text
    label = match.group(1) or match.group(2)
    return label, match.group(3) or ""


def _check_multiple_choice(question: Question, given: str) -> bool:
    gold_label = normalize_answer(question.gold_answer)
    gold_text = normalize_answer(question.gold_option_text() or "")
    norm_given = normalize_answer(given)
    if norm_given and norm_given in (gold_label, gold_text):
        return True
    label, _ = split_option_label(given)
    return label is not None and normalize_answer(label) == gold_label


def _contains_token_window(haystack: Sequence[str], needle: Sequence[str]) -> bool:
    if not needle:
        return False
    for start in range(len(haystack) - len(needle) + 1):
        if list(haystack[start : start + len(needle)]) == list(needle):
            return True
    return False


def _check_phrase(question: Question, given: str) -> bool:
    norm_gold = normalize_answer(question.gold_answer)
    norm_given = normalize_answer(given)
    if not norm_gold:
        return norm_given == norm_gold
    if norm_given == norm_gold:
        return True
    return _contains_token_window(norm_given.split(), norm_gold.split())


def check_answer(
    question: Question,
    given: str,
    policy: JudgePolicy = JudgePolicy(),
    gateway: Gateway | None = None,
    core_endpoint: ModelEndpoint | None = None,
    sink: TranscriptSink | None = None,
) -> bool:
    """Whether the given answer is correct for the question.

    Multiple choice: the answer resolves to the gold option label or
    equals the gold option text. Phrase: exact normalized match, or the
    gold phrase appears as a contiguous token window of the answer.
    """
    if policy.mode is JudgeMode.LLM_JUDGE:
        if gateway is None or core_endpoint is None:
            raise JudgeUnavailable("LLM judge needs a gateway and core endpoint")
        try:
            raw = gateway.complete(core_endpoint, render_judge(question, given), sink=sink)
            verdict = extract_json_payload(raw)
        except Exception as exc:
            raise JudgeUnavailable(str(exc)) from exc
        return bool(verdict.get("correct", False))
    if question.kind is QuestionKind.MULTIPLE_CHOICE:
        return _check_multiple_choice(question, given)
    return _check_phrase(question, given)


@dataclass(frozen=True)
class Transition:
    question_id: str
    before_correct: bool
    after_correct: bool

    def to_payload(self) -> dict:
        return {
            "question_id": self.question_id,
            "before_correct": self.before_correct,
            "after_correct": self.after_correct,
        }


@dataclass(frozen=True)
class ValidationReport:
    """Before/after accuracy and transition rates over seed questions."""

    acc1: Fraction
    acc2: Fraction
    cr: Fraction
    cte: Fraction
    n_total: int
    transitions: tuple[Transition, ...]

    def to_payload(self) -> dict:
        return {
            "acc1": f"{self.acc1.numerator}/{self.acc1.denominator}",
            "acc2": f"{self.acc2.numerator}/{self.acc2.denominator}",
            "cr": f"{self.cr.numerator}/{self.cr.denominator}",
            "cte": f"{self.cte.numerator}/{self.cte.denominator}",
            "n_total": self.n_total,
            "transitions": [t.to_payload() for t in self.transitions],
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "ValidationReport":
        return cls(
            acc1=Fraction(payload["acc1"]),
            acc2=Fraction(payload["acc2"]),
            cr=Fraction(payload["cr"]),
            cte=Fraction(payload["cte"]),
            n_total=payload["n_total"],
            transitions=tuple(
                Transition(
                    question_id=t["question_id"],
                    before_correct=t["before_correct"],
                    after_correct=t["after_correct"],
                )
                for t in payload["transitions"]
            ),
        )


def report_from_transitions(transitions: Iterable[Transition]) -> ValidationReport:
    """Fold a transition table into the four metrics."""
    transitions = tuple(transitions)
    n = len(transitions)
    if n == 0:
        zero = Fraction(0)
        return ValidationReport(zero, zero, zero, zero, 0, ())
    n_acc1 = sum(1 for t in transitions if t.before_correct)
    n_acc2 = sum(1 for t in transitions if t.after_correct)
    n_cr = sum(1 for t in transitions if t.after_correct and not t.before_correct)
    n_cte = sum(1 for t in transitions if t.before_correct and not t.after_correct)
    return ValidationReport(
        acc1=Fraction(n_acc1, n),
        acc2=Fraction(n_acc2, n),
        cr=Fraction(n_cr, n),
        cte=Fraction(n_cte, n),
        n_total=n,
        transitions=transitions,
    )


SuggestionSelector = Callable[[Question, BatchDossier], "str | None"]


def own_batch_suggestion(question: Question, dossier: BatchDossier) -> str | None:
    return dossier.suggestion.suggestions


def _majority_answer_correct(
    gateway: Gateway,
    endpoint: ModelEndpoint,
    question: Question,
    suggestions: str | None,
    policy: JudgePolicy,
    trials: int,
    core_endpoint: ModelEndpoint | None,
    sink: TranscriptSink | None,
) -> bool:
    votes = 0
    for _ in range(trials):
        answer = answer_or_sentinel(gateway, endpoint, question, suggestions, sink=sink)
        if check_answer(question, answer, policy, gateway, core_endpoint, sink):
            votes += 1
    return votes * 2 > trials


def validate_suggestions(
    dossiers: Sequence[BatchDossier],
    gateway: Gateway,
    target_endpoint: ModelEndpoint,
    policy: JudgePolicy = JudgePolicy(),
    suggestion_for: SuggestionSelector = own_batch_suggestion,
    trials: int = 1,
    core_endpoint: ModelEndpoint | None = None,
    sink: TranscriptSink | None = None,
) -> ValidationReport:
    """Measure suggestion effectiveness over every seed question.

    Each question is answered fresh without suggestions, then again with
    the text ``suggestion_for`` selects; questions it maps to None are
    excluded (used by transfer mode). Per-question failures count as
    incorrect answers, never abort the harness.
    """
    transitions: list[Transition] = []
    for dossier in dossiers:
        for record in dossier.seed_records:
            question = record.question
            suggestion = suggestion_for(question, dossier)
            if suggestion is None:
                continue
            before = _majority_answer_correct(
                gateway, target_endpoint, question, None, policy, trials, core_endpoint, sink
            )
            after = _majority_answer_correct(
                gateway, target_endpoint, question, suggestion, policy, trials, core_endpoint, sink
            )
            transitions.append(Transition(question.id, before, after))
    return report_from_transitions(transitions)


_DEFAULT_STOP_ENTITIES: frozenset[str] | None = None


def default_stop_entities() -> frozenset[str]:
    """Normalized stop-entity list bundled with the package."""
    global _DEFAULT_STOP_ENTITIES
    if _DEFAULT_STOP_ENTITIES is None:
        text = (
            resources.files("interviewkit").joinpath("assets/stop_entities.txt").read_text("utf-8")
        )
        _DEFAULT_STOP_ENTITIES = frozenset(
            normalize_entity(line)
            for line in text.splitlines()
            if line.strip() and not line.startswith("#")
        )
    return _DEFAULT_STOP_ENTITIES


def load_stop_entities(path: str | Path) -> frozenset[str]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return frozenset(
        normalize_entity(line) for line in lines if line.strip() and not line.startswith("#")
    )


def related_questions(
    graph: ContextGraph,
    dataset: Sequence[Question],
    stop_entities: frozenset[str] | None = None,
) -> dict[str, set[str]]:
    """Symmetric relation: two questions sharing a graph entity are related.

    Entities outside the graph never count; shared entities that are all
    on the stop list do not relate questions (they are non-knowledge
    surface terms like sexes or ages).
    """
    if stop_entities is None:
        stop_entities = default_stop_entities()
    effective: dict[str, frozenset[str]] = {}
    for question in dataset:
        tags = question.entity_tags or frozenset()
        effective[question.id] = frozenset(
            e
            for e in (normalize_entity(t) for t in tags)
            if e in graph.nodes and e not in stop_entities
        )
    related: dict[str, set[str]] = {q.id: set() for q in dataset}
    ids = [q.id for q in dataset]
    for i, qa in enumerate(ids):
        for qb in ids[i + 1 :]:
            if qa != qb and effective[qa] & effective[qb]:
                related[qa].add(qb)
                related[qb].add(qa)
    return related


def transfer_suggestions(
    question_id: str,
    related: Mapping[str, set[str]],
    dossiers: Sequence[BatchDossier],
) -> str:
    """Concatenated suggestions from related questions' dossiers,
    excluding the dossier that owns the question itself."""
    owner: dict[str, BatchDossier] = {}
    for dossier in dossiers:
        for record in dossier.seed_records:
            owner[record.question.id] = dossier
    own = owner.get(question_id)
    collected: list[str] = []
    for other_id in sorted(related.get(question_id, ())):
        dossier = owner.get(other_id)
        if dossier is None or dossier is own or dossier.degraded:
            continue
        text = dossier.suggestion.suggestions
        if text and text not in collected:
            collected.append(text)
    if not collected:
        raise NoTransferableSuggestions(question_id)
    return "\n".join(collected)


def transfer_selector(
    related: Mapping[str, set[str]], dossiers: Sequence[BatchDossier]
) -> SuggestionSelector:
    """Selector for transfer-mode validation; unmatchable questions are
    skipped rather than failing the harness."""

    def select(question: Question, dossier: BatchDossier) -> str | None:
        try:
            return transfer_suggestions(question.id, related, dossiers)
        except NoTransferableSuggestions:
            return None

    return select
