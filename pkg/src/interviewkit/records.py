"""Core domain types: questions, answer records, dossiers, suggestions.

All types are immutable values, safe to share between concurrent tasks.
Each one serializes to a JSON-compatible payload via ``to_payload`` and
round-trips through ``from_payload`` with field-level equality.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any


class DifficultyLevel(enum.IntEnum):
    """Question difficulty with total order Easy < Medium < Hard."""

    EASY = 1
    MEDIUM = 2
    HARD = 3

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def from_label(cls, label: str) -> "DifficultyLevel":
        try:
            return cls[label.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown difficulty label {label!r}") from None


class QuestionKind(enum.Enum):
    MULTIPLE_CHOICE = "multiple_choice"
    PHRASE_QA = "phrase_qa"


class Stage(enum.Enum):
    GRADING = "grading"
    EXTENSION = "extension"


@dataclass(frozen=True)
class ChoiceOption:
    """One labeled answer option of a multiple-choice question."""

    label: str
    text: str


@dataclass(frozen=True)
class Question:
    """A single question with its gold answer.

    ``options`` is non-empty iff the question is multiple-choice, and the
    gold answer of a multiple-choice question must equal one option label.
    ``entity_tags`` is filled after entity extraction and holds normalized
    entity strings.
    """

    id: str
    text: str
    kind: QuestionKind
    gold_answer: str
    options: tuple[ChoiceOption, ...] = ()
    difficulty: DifficultyLevel | None = None
    background: str | None = None
    entity_tags: frozenset[str] | None = None

    def __post_init__(self) -> None:
        if self.kind is QuestionKind.MULTIPLE_CHOICE:
            labels = {opt.label for opt in self.options}
            if self.gold_answer not in labels:
                raise ValueError(
                    f"question {self.id!r}: gold answer {self.gold_answer!r} is not an option label"
                )
        elif self.options:
            raise ValueError(f"question {self.id!r}: phrase questions take no options")

    def gold_option_text(self) -> str | None:
        """Text of the gold option, or None for phrase questions."""
        for opt in self.options:
            if opt.label == self.gold_answer:
                return opt.text
        return None

    def with_tags(self, tags: frozenset[str]) -> "Question":
        return replace(self, entity_tags=tags)

    def to_payload(self) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "id": self.id,
            "kind": self.kind.value,
            "text": self.text,
            "gold_answer": self.gold_answer,
        }
        if self.options:
            payload["options"] = [{"label": o.label, "text": o.text} for o in self.options]
        if self.difficulty is not None:
            payload["difficulty"] = self.difficulty.label
        if self.background is not None:
            payload["background"] = self.background
        if self.entity_tags is not None:
            payload["entity_tags"] = sorted(self.entity_tags)
        return payload

    @classmethod
    def from_payload(cls, payload: dict[str, Any]) -> "Question":
        tags = payload.get("entity_tags")
        return cls(
            id=payload["id"],
            text=payload["text"],
            kind=QuestionKind(payload["kind"]),
            gold_answer=payload["gold_answer"],
            options=tuple(
                ChoiceOption(label=o["label"], text=o["text"]) for o in payload.get("options", [])
            ),
            difficulty=(
                DifficultyLevel.from_label(payload["difficulty"])
                if payload.get("difficulty") is not None
                else None
            ),
            background=payload.get("background"),
            entity_tags=frozenset(tags) if tags is not None else None,
        )


NO_ANSWER_SENTINEL = "«no-answer»"


@dataclass(frozen=True)
class QaRecord:
    """One asked question with the model's answer and its judgment.

    Grading records carry round 0; extension records carry the 1-based
    round they were generated in. The round is stored rather than inferred
    so journals stay self-describing after crashes.
    """

    question: Question
    asked_difficulty: DifficultyLevel
    model_answer: str
    correct: bool
    stage: Stage
    round: int = 0

    def __post_init__(self) -> None:
        if self.stage is Stage.GRADING and self.round != 0:
            raise ValueError("grading records carry round 0")
        if self.stage is Stage.EXTENSION and self.round < 1:
            raise ValueError("extension records carry round >= 1")

    def to_payload(self) -> dict[str, Any]:
        return {
            "question": self.question.to_payload(),
            "asked_difficulty": self.asked_difficulty.label,
            "model_answer": self.model_answer,
            "correct": self.correct,
            "stage": self.stage.value,
            "round": self.round,
        }

    @classmethod
    def from_payload(cls, payload: dict[str, Any]) -> "QaRecord":
        return cls(
            question=Question.from_payload(payload["question"]),
            asked_difficulty=DifficultyLevel.from_label(payload["asked_difficulty"]),
            model_answer=payload["model_answer"],
            correct=payload["correct"],
            stage=Stage(payload["stage"]),
            round=payload["round"],
        )


@dataclass(frozen=True)
class EvaluationSuggestion:
    """Four-field critique returned by the feedback stage.

    All fields are present (possibly empty) after a successful parse.
    """

    flaws_knowledge: str = ""
    flaws_capability: str = ""
    comprehensive_performance: str = ""
    suggestions: str = ""

    def to_payload(self) -> dict[str, str]:
        return {
            "flaws_knowledge": self.flaws_knowledge,
            "flaws_capability": self.flaws_capability,
            "comprehensive_performance": self.comprehensive_performance,
            "suggestions": self.suggestions,
        }

    @classmethod
    def from_payload(cls, payload: dict[str, Any]) -> "EvaluationSuggestion":
        return cls(
            flaws_knowledge=payload.get("flaws_knowledge", ""),
            flaws_capability=payload.get("flaws_capability", ""),
            comprehensive_performance=payload.get("comprehensive_performance", ""),
            suggestions=payload.get("suggestions", ""),
        )


def fraction_to_str(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


def fraction_from_str(text: str) -> Fraction:
    return Fraction(text)


@dataclass(frozen=True)
class BatchDossier:
    """One seed batch plus everything the run produced for it."""

    batch_id: str
    seed_records: tuple[QaRecord, ...]
    extension_records: tuple[QaRecord, ...]
    suggestion: EvaluationSuggestion
    final_avg_score: Fraction
    degraded: bool = False

    def __post_init__(self) -> None:
        rounds = [r.round for r in self.extension_records]
        if rounds != list(range(1, len(rounds) + 1)):
            raise ValueError("extension records must carry consecutive rounds from 1")

    def all_records(self) -> tuple[QaRecord, ...]:
        return self.seed_records + self.extension_records

    def to_payload(self) -> dict[str, Any]:
        return {
            "batch_id": self.batch_id,
            "seed_records": [r.to_payload() for r in self.seed_records],
            "extension_records": [r.to_payload() for r in self.extension_records],
            "suggestion": self.suggestion.to_payload(),
            "final_avg_score": fraction_to_str(self.final_avg_score),
            "degraded": self.degraded,
        }

    @classmethod
    def from_payload(cls, payload: dict[str, Any]) -> "BatchDossier":
        return cls(
            batch_id=payload["batch_id"],
            seed_records=tuple(QaRecord.from_payload(r) for r in payload["seed_records"]),
            extension_records=tuple(
                QaRecord.from_payload(r) for r in payload["extension_records"]
            ),
            suggestion=EvaluationSuggestion.from_payload(payload["suggestion"]),
            final_avg_score=fraction_from_str(payload["final_avg_score"]),
            degraded=payload.get("degraded", False),
        )
