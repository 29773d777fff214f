"""Text similarity backends used for entity and chunk selection.

The default backend is character n-gram cosine: deterministic and fully
offline, which keeps the sampling core testable without any service. An
embedding-service backend is available as an opt-in.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable


def char_ngrams(text: str, n: int) -> Counter:
    """Character n-gram counts of the lowercased text.

    Texts shorter than n contribute themselves as a single gram so that any
    non-empty text has a non-empty profile.
    """
    text = text.lower()
    if not text:
        return Counter()
    if len(text) < n:
        return Counter([text])
    return Counter(text[i : i + n] for i in range(len(text) - n + 1))


def _cosine(a: Counter, b: Counter) -> float:
    if not a or not b:
        return 0.0
    dot = sum(count * b[gram] for gram, count in a.items())
    if dot == 0:
        return 0.0
    norm_a = math.sqrt(sum(c * c for c in a.values()))
    norm_b = math.sqrt(sum(c * c for c in b.values()))
    return dot / (norm_a * norm_b)


@dataclass
class LexicalNgramBackend:
    """Cosine similarity over character n-gram count vectors."""

    ngram_size: int = 3

    def score(self, a: str, b: str) -> float:
        return _cosine(char_ngrams(a, self.ngram_size), char_ngrams(b, self.ngram_size))


@dataclass
class EmbeddingBackend:
    """Cosine similarity over service embeddings, cached per (model, text).

    ``embed`` is any callable returning a vector for a text; production
    binds it to the gateway's embedding endpoint. Negative cosines clamp
    to 0 so scores stay in [0, 1].
    """

    embed: Callable[[str], list[float]]
    model_name: str = ""
    _cache: dict[tuple[str, str], list[float]] = field(default_factory=dict)

    def _vector(self, text: str) -> list[float]:
        key = (self.model_name, text)
        if key not in self._cache:
            self._cache[key] = self.embed(text)
        return self._cache[key]

    def score(self, a: str, b: str) -> float:
        if not a or not b:
            return 0.0
        va, vb = self._vector(a), self._vector(b)
        dot = sum(x * y for x, y in zip(va, vb))
        norm = math.sqrt(sum(x * x for x in va)) * math.sqrt(sum(y * y for y in vb))
        if norm == 0:
            return 0.0
        return max(0.0, min(1.0, dot / norm))


SimilarityBackend = LexicalNgramBackend | EmbeddingBackend


def similarity(backend: SimilarityBackend, a: str, b: str) -> float:
    """Similarity score in [0, 1]."""
    return backend.score(a, b)
