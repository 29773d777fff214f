"""Benchmark ingestion, knowledge-base assembly, and difficulty relabeling.

Question files use one canonical line-delimited JSON schema; adapters for
third-party benchmarks are thin mappings onto it and live outside this
package.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path

from .difficulty import RationalLike, as_fraction
from .errors import EmptyDataset, MissingCorpus, OutOfRange, SchemaError
from .records import ChoiceOption, DifficultyLevel, Question, QuestionKind

KNOWLEDGE_BASE_KINDS = ("inline", "corpus", "none")


@dataclass(frozen=True)
class BenchmarkManifest:
    """Where a benchmark's questions and knowledge base live.

    ``strip_background_on_eval`` moves inline backgrounds into the
    knowledge base and off the questions, so they can never reach a
    target prompt.
    """

    name: str
    question_file: str
    knowledge_base: str = "inline"
    corpus_path: str | None = None
    strip_background_on_eval: bool = False

    def __post_init__(self) -> None:
        if self.knowledge_base not in KNOWLEDGE_BASE_KINDS:
            raise ValueError(f"unknown knowledge_base kind {self.knowledge_base!r}")
        if self.knowledge_base == "corpus" and not self.corpus_path:
            raise ValueError("corpus knowledge base needs corpus_path")

    @classmethod
    def from_file(cls, path: str | Path) -> "BenchmarkManifest":
        path = Path(path)
        data = json.loads(path.read_text(encoding="utf-8"))
        manifest = cls(
            name=data["name"],
            question_file=data["question_file"],
            knowledge_base=data.get("knowledge_base", "inline"),
            corpus_path=data.get("corpus_path"),
            strip_background_on_eval=data.get("strip_background_on_eval", False),
        )
        return manifest

    def resolve(self, base: Path) -> tuple[Path, Path | None]:
        qfile = base / self.question_file
        corpus = base / self.corpus_path if self.corpus_path else None
        return qfile, corpus


def _question_from_row(row: dict, line_no: int) -> tuple[Question, Fraction | None]:
    try:
        kind = QuestionKind(row["kind"])
        options = tuple(
            ChoiceOption(label=o["label"], text=o["text"]) for o in row.get("options", [])
        )
        difficulty = (
            DifficultyLevel.from_label(row["difficulty"])
            if row.get("difficulty") is not None
            else None
        )
        question = Question(
            id=str(row["id"]),
            text=row["text"],
            kind=kind,
            gold_answer=row["gold_answer"],
            options=options,
            difficulty=difficulty,
            background=row.get("background"),
            entity_tags=(
                frozenset(row["entity_tags"]) if row.get("entity_tags") is not None else None
            ),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(line_no, str(exc)) from exc
    accuracy = row.get("human_accuracy")
    return question, as_fraction(accuracy) if accuracy is not None else None


def load_question_file(path: str | Path) -> list[tuple[Question, Fraction | None]]:
    """Parse the canonical question schema; errors carry the line number."""
    rows = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(line_no, f"invalid JSON: {exc.msg}") from exc
            rows.append(_question_from_row(row, line_no))
    return rows


def question_to_row(question: Question, human_accuracy: Fraction | None = None) -> dict:
    row = question.to_payload()
    if human_accuracy is not None:
        row["human_accuracy"] = str(human_accuracy)
    return row


def save_question_file(
    path: str | Path, rows: list[tuple[Question, Fraction | None]]
) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for question, accuracy in rows:
            fh.write(
                json.dumps(question_to_row(question, accuracy), sort_keys=True, ensure_ascii=False)
                + "\n"
            )


def load_corpus_file(path: str | Path) -> list[tuple[str, str]]:
    docs = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
                docs.append((str(row["doc_id"]), row["text"]))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise SchemaError(line_no, f"bad corpus row: {exc}") from exc
    return docs


def load_dataset(
    manifest: BenchmarkManifest, base: str | Path = "."
) -> tuple[list[Question], list[tuple[str, str]]]:
    """Questions plus the knowledge base the manifest describes.

    Inline backgrounds are deduplicated by content digest and become
    documents in file order; with ``strip_background_on_eval`` they are
    removed from the questions entirely.
    """
    qfile, corpus = manifest.resolve(Path(base))
    if not qfile.exists():
        raise MissingCorpus(f"question file not found: {qfile}")
    rows = load_question_file(qfile)
    if not rows:
        raise EmptyDataset(f"no questions in {qfile}")
    questions = [q for q, _ in rows]

    knowledge_base: list[tuple[str, str]] = []
    if manifest.knowledge_base == "inline":
        seen: set[str] = set()
        for question in questions:
            if not question.background:
                continue
            digest = hashlib.sha256(question.background.encode("utf-8")).hexdigest()
            if digest in seen:
                continue
            seen.add(digest)
            knowledge_base.append((f"bg-{digest[:12]}", question.background))
    elif manifest.knowledge_base == "corpus":
        assert corpus is not None
        if not corpus.exists():
            raise MissingCorpus(f"corpus file not found: {corpus}")
        knowledge_base = load_corpus_file(corpus)

    if manifest.strip_background_on_eval:
        questions = [replace(q, background=None) for q in questions]
    return questions, knowledge_base


def relabel_difficulty(
    human_accuracy: RationalLike, invert: bool = False
) -> DifficultyLevel:
    """Difficulty from human answering accuracy.

    The literal mapping labels low-accuracy questions Easy; ``invert``
    swaps Easy and Hard for the intuitive direction. The 1/3 and 2/3
    boundaries belong to Medium.
    """
    accuracy = as_fraction(human_accuracy)
    if not Fraction(0) <= accuracy <= Fraction(1):
        raise OutOfRange(f"accuracy {accuracy} outside [0, 1]")
    if accuracy < Fraction(1, 3):
        level = DifficultyLevel.EASY
    elif accuracy <= Fraction(2, 3):
        level = DifficultyLevel.MEDIUM
    else:
        level = DifficultyLevel.HARD
    if invert and level is not DifficultyLevel.MEDIUM:
        level = (
            DifficultyLevel.HARD if level is DifficultyLevel.EASY else DifficultyLevel.EASY
        )
    return level


def relabel_file(in_path: str | Path, out_path: str | Path, invert: bool = False) -> int:
    """Rewrite a question file, setting difficulty from human_accuracy.

    Questions without a human_accuracy field pass through unchanged.
    Returns the number of relabeled questions.
    """
    rows = load_question_file(in_path)
    relabeled = 0
    out_rows = []
    for question, accuracy in rows:
        if accuracy is not None:
            question = replace(
                question, difficulty=relabel_difficulty(accuracy, invert=invert)
            )
            relabeled += 1
        out_rows.append((question, accuracy))
    save_question_file(out_path, out_rows)
    return relabeled
