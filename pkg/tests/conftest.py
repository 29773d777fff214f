"""Shared fixtures: tiny corpora, deterministic extractors, scripted gateways."""

from __future__ import annotations

import json

import pytest

from interviewkit.chunking import ChunkPolicy
from interviewkit.gateway import (
    EndpointRole,
    Gateway,
    ModelEndpoint,
    ScriptedTransport,
    ScriptRule,
)
from interviewkit.graph import build_context_graph
from interviewkit.records import ChoiceOption, DifficultyLevel, Question, QuestionKind


def make_question(
    qid: str = "q1",
    text: str = "What is it?",
    kind: QuestionKind = QuestionKind.PHRASE_QA,
    gold: str = "it",
    options: tuple = (),
    difficulty: DifficultyLevel | None = None,
    background: str | None = None,
    tags: frozenset[str] | None = None,
) -> Question:
    return Question(
        id=qid,
        text=text,
        kind=kind,
        gold_answer=gold,
        options=options,
        difficulty=difficulty,
        background=background,
        entity_tags=tags,
    )


def make_mc_question(qid: str, text: str, gold_label: str, option_texts: dict[str, str], **kw):
    options = tuple(ChoiceOption(label, otext) for label, otext in option_texts.items())
    return make_question(
        qid, text, kind=QuestionKind.MULTIPLE_CHOICE, gold=gold_label, options=options, **kw
    )


def mock_endpoint(role: EndpointRole = EndpointRole.TARGET, **kw) -> ModelEndpoint:
    return ModelEndpoint(role=role, model_name=f"mock-{role.value}", **kw)


def scripted_gateway(rules: list[ScriptRule]) -> tuple[Gateway, ScriptedTransport]:
    transport = ScriptedTransport(rules)
    gateway = Gateway(transport, clock=None, sleep=lambda _s: None)
    return gateway, transport


def answer_rule(answer: str, regex: str = ".") -> ScriptRule:
    return ScriptRule(response=json.dumps({"answer": answer}), regex=regex)


@pytest.fixture
def two_chunk_bundle():
    """The hand-enumerated construction instance.

    One document, two chunks; chunk 1 mentions A and B, chunk 2 mentions
    B and C. Expected: 3 nodes, B belongs to both chunks, edges A-B, B-C,
    and A-C (through co-document linking).
    """
    doc = "Alpha beta here. Beta gamma there."
    extractions = {
        "doc1#c0": ["A", "B"],
        "doc1#c1": ["B", "C"],
    }

    def extractor(chunk):
        return extractions[chunk.chunk_id]

    policy = ChunkPolicy(target_chars=17, boundary="sentence")
    return build_context_graph([("doc1", doc)], extractor, policy)


@pytest.fixture
def two_doc_bundle(two_chunk_bundle):
    """The two-document extension: a second document mentioning C and D."""
    doc1 = "Alpha beta here. Beta gamma there."
    doc2 = "Gamma delta elsewhere."
    extractions = {
        "doc1#c0": ["A", "B"],
        "doc1#c1": ["B", "C"],
        "doc2#c0": ["C", "D"],
    }

    def extractor(chunk):
        return extractions[chunk.chunk_id]

    policy = ChunkPolicy(target_chars=17, boundary="sentence")
    return build_context_graph([("doc1", doc1), ("doc2", doc2)], extractor, policy)
