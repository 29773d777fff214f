"""Dataset ingestion, knowledge-base assembly, and difficulty relabeling."""

import json
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from interviewkit.datasets import (
    BenchmarkManifest,
    load_dataset,
    load_question_file,
    relabel_difficulty,
    relabel_file,
    save_question_file,
)
from interviewkit.errors import MissingCorpus, OutOfRange, SchemaError
from interviewkit.records import DifficultyLevel


def write_questions(path, rows):
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")


MC_ROW = {
    "id": "q1",
    "kind": "multiple_choice",
    "text": "Pick.",
    "options": [{"label": "A", "text": "one"}, {"label": "B", "text": "two"}],
    "gold_answer": "B",
}
PHRASE_ROW = {"id": "q2", "kind": "phrase_qa", "text": "Say.", "gold_answer": "word"}


def test_load_well_formed_file(tmp_path):
    rows = [MC_ROW, PHRASE_ROW, {**PHRASE_ROW, "id": "q3", "difficulty": "hard"}]
    qfile = tmp_path / "q.ndjson"
    write_questions(qfile, rows)
    loaded = load_question_file(qfile)
    assert [q.id for q, _ in loaded] == ["q1", "q2", "q3"]
    assert [o.label for o in loaded[0][0].options] == ["A", "B"]
    assert loaded[2][0].difficulty is DifficultyLevel.HARD


def test_schema_error_carries_line_number(tmp_path):
    qfile = tmp_path / "q.ndjson"
    qfile.write_text(
        json.dumps(MC_ROW) + "\n" + "{broken json\n" + json.dumps(PHRASE_ROW) + "\n",
        encoding="utf-8",
    )
    with pytest.raises(SchemaError) as excinfo:
        load_question_file(qfile)
    assert excinfo.value.line == 2


def test_schema_error_on_bad_gold_label(tmp_path):
    qfile = tmp_path / "q.ndjson"
    write_questions(qfile, [{**MC_ROW, "gold_answer": "Z"}])
    with pytest.raises(SchemaError) as excinfo:
        load_question_file(qfile)
    assert excinfo.value.line == 1


def test_inline_backgrounds_deduplicate(tmp_path):
    rows = [
        {**PHRASE_ROW, "id": "a", "background": "Shared text."},
        {**PHRASE_ROW, "id": "b", "background": "Shared text."},
        {**PHRASE_ROW, "id": "c", "background": "Unique text."},
    ]
    qfile = tmp_path / "q.ndjson"
    write_questions(qfile, rows)
    manifest = BenchmarkManifest(name="t", question_file="q.ndjson", knowledge_base="inline")
    questions, kb = load_dataset(manifest, tmp_path)
    assert len(kb) == 2
    assert [text for _, text in kb] == ["Shared text.", "Unique text."]
    assert questions[0].background == "Shared text."


def test_strip_background_on_eval(tmp_path):
    rows = [{**PHRASE_ROW, "id": "a", "background": "Secret reference."}]
    qfile = tmp_path / "q.ndjson"
    write_questions(qfile, rows)
    manifest = BenchmarkManifest(
        name="t", question_file="q.ndjson", knowledge_base="inline", strip_background_on_eval=True
    )
    questions, kb = load_dataset(manifest, tmp_path)
    assert questions[0].background is None
    assert kb and kb[0][1] == "Secret reference."


def test_separate_corpus_and_missing_corpus(tmp_path):
    qfile = tmp_path / "q.ndjson"
    write_questions(qfile, [PHRASE_ROW])
    corpus = tmp_path / "corpus.ndjson"
    corpus.write_text(json.dumps({"doc_id": "d1", "text": "Doc text."}) + "\n", encoding="utf-8")
    manifest = BenchmarkManifest(
        name="t", question_file="q.ndjson", knowledge_base="corpus", corpus_path="corpus.ndjson"
    )
    _, kb = load_dataset(manifest, tmp_path)
    assert kb == [("d1", "Doc text.")]

    missing = BenchmarkManifest(
        name="t", question_file="q.ndjson", knowledge_base="corpus", corpus_path="nope.ndjson"
    )
    with pytest.raises(MissingCorpus):
        load_dataset(missing, tmp_path)


def test_load_save_load_fixed_point(tmp_path):
    rows = [MC_ROW, {**PHRASE_ROW, "difficulty": "easy", "human_accuracy": "0.25"}]
    first = tmp_path / "one.ndjson"
    second = tmp_path / "two.ndjson"
    write_questions(first, rows)
    loaded = load_question_file(first)
    save_question_file(second, loaded)
    reloaded = load_question_file(second)
    assert reloaded == loaded
    third = tmp_path / "three.ndjson"
    save_question_file(third, reloaded)
    assert second.read_text() == third.read_text()


def test_relabel_boundaries_literal_mode():
    assert relabel_difficulty("0.2") is DifficultyLevel.EASY
    assert relabel_difficulty("0.5") is DifficultyLevel.MEDIUM
    assert relabel_difficulty(Fraction(1, 3)) is DifficultyLevel.MEDIUM
    assert relabel_difficulty(Fraction(2, 3)) is DifficultyLevel.MEDIUM
    assert relabel_difficulty("0.9") is DifficultyLevel.HARD
    assert relabel_difficulty(0) is DifficultyLevel.EASY
    assert relabel_difficulty(1) is DifficultyLevel.HARD


def test_relabel_inverted_mode():
    assert relabel_difficulty("0.2", invert=True) is DifficultyLevel.HARD
    assert relabel_difficulty("0.5", invert=True) is DifficultyLevel.MEDIUM
    assert relabel_difficulty("0.9", invert=True) is DifficultyLevel.EASY


def test_relabel_out_of_range():
    with pytest.raises(OutOfRange):
        relabel_difficulty("1.5")
    with pytest.raises(OutOfRange):
        relabel_difficulty(-0.1)


@given(st.fractions(min_value=0, max_value=1), st.fractions(min_value=0, max_value=1), st.booleans())
def test_relabel_monotone_step_function(a, b, invert):
    lo, hi = sorted((a, b))
    left = relabel_difficulty(lo, invert=invert)
    right = relabel_difficulty(hi, invert=invert)
    if invert:
        assert left >= right
    else:
        assert left <= right


def test_relabel_file_rewrites_difficulty(tmp_path):
    rows = [
        {**PHRASE_ROW, "id": "a", "human_accuracy": "0.2"},
        {**PHRASE_ROW, "id": "b", "human_accuracy": "0.8"},
        {**PHRASE_ROW, "id": "c"},
    ]
    infile, outfile = tmp_path / "in.ndjson", tmp_path / "out.ndjson"
    write_questions(infile, rows)
    assert relabel_file(infile, outfile) == 2
    out = load_question_file(outfile)
    assert out[0][0].difficulty is DifficultyLevel.EASY
    assert out[1][0].difficulty is DifficultyLevel.HARD
    assert out[2][0].difficulty is None
