"""Similarity backends against an independent cosine oracle."""

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from interviewkit.similarity import EmbeddingBackend, LexicalNgramBackend, similarity


def oracle_trigram_cosine(a: str, b: str) -> float:
    """Independent n-gram cosine: dict-loop formulation, no Counter."""
    def grams(text):
        text = text.lower()
        if not text:
            return {}
        if len(text) < 3:
            return {text: 1}
        out = {}
        for i in range(len(text) - 2):
            g = text[i : i + 3]
            out[g] = out.get(g, 0) + 1
        return out

    ga, gb = grams(a), grams(b)
    dot = 0
    for g, c in ga.items():
        if g in gb:
            dot += c * gb[g]
    if dot == 0:
        return 0.0
    na = math.sqrt(sum(v * v for v in ga.values()))
    nb = math.sqrt(sum(v * v for v in gb.values()))
    return dot / (na * nb)


BACKEND = LexicalNgramBackend()


def test_identity_is_one():
    assert similarity(BACKEND, "abc", "abc") == 1.0
    assert similarity(BACKEND, "a", "a") == 1.0


def test_disjoint_trigrams_are_zero():
    assert similarity(BACKEND, "abc", "xyz") == 0.0


def test_agrees_with_oracle_on_spec_example():
    mine = similarity(BACKEND, "duodenal injury", "duodenal bulb injury")
    theirs = oracle_trigram_cosine("duodenal injury", "duodenal bulb injury")
    assert mine == pytest.approx(theirs, abs=1e-9)
    assert 0.0 < mine < 1.0


@given(st.text(max_size=25), st.text(max_size=25))
def test_agrees_with_oracle_everywhere(a, b):
    assert similarity(BACKEND, a, b) == pytest.approx(oracle_trigram_cosine(a, b), abs=1e-9)


@given(st.text(max_size=25), st.text(max_size=25))
def test_symmetric_and_bounded(a, b):
    ab = similarity(BACKEND, a, b)
    assert ab == similarity(BACKEND, b, a)
    assert 0.0 <= ab <= 1.0 + 1e-12


def test_embedding_backend_caches_by_model_and_text():
    calls = []

    def embed(text):
        calls.append(text)
        return [float(len(text)), 1.0]

    backend = EmbeddingBackend(embed=embed, model_name="m")
    s1 = backend.score("aa", "aa")
    s2 = backend.score("aa", "aa")
    assert s1 == s2 == pytest.approx(1.0)
    assert calls == ["aa"]


def test_embedding_backend_clamps_negative_cosine():
    vectors = {"p": [1.0, 0.0], "q": [-1.0, 0.0]}
    backend = EmbeddingBackend(embed=lambda t: vectors[t])
    assert backend.score("p", "q") == 0.0
