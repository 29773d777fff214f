"""Knowledge-path sampling over the context graph.

A path starts at the graph entity most similar to a randomly chosen seed
entity and extends hop by hop: each hop picks uniformly among the highest
similarity unvisited neighbors of the current entity, then uniformly among
that entity's chunks most similar to the seed question text. Concatenated
chunk texts become the background for question generation.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from typing import Sequence

from .errors import DanglingChunkId, EmptyGraph, NoSeedEntities
from .graph import ContextGraph, GraphBundle, normalize_entity
from .records import Question
from .similarity import SimilarityBackend, similarity

DEFAULT_FANOUT = 5


@dataclass(frozen=True)
class KnowledgePath:
    """An entity/chunk walk plus the background text it produced.

    ``entity_candidates`` logs the candidate set each non-root hop chose
    from, so greedy-relevance can be audited after the fact.
    """

    hops: tuple[tuple[str, str], ...]
    background_text: str
    rng_seed: int
    entity_candidates: tuple[tuple[str, ...], ...] = ()


def derive_seed(master_seed: int, *indices: int | str) -> int:
    """Stable child seed for a nested scope; independent of platform hashing."""
    material = ":".join([str(master_seed), *map(str, indices)])
    return int.from_bytes(hashlib.sha256(material.encode("utf-8")).digest()[:8], "big")


def most_similar_entity(
    graph: ContextGraph, query: str, backend: SimilarityBackend
) -> str:
    """Entity maximizing similarity to the query; ties go to the
    lexicographically smaller entity."""
    if not graph.nodes:
        raise EmptyGraph("cannot search an empty graph")
    best_entity = None
    best_score = -1.0
    for entity in sorted(graph.nodes):
        score = similarity(backend, query, entity)
        if score > best_score:
            best_entity, best_score = entity, score
    assert best_entity is not None
    return best_entity


def _top_by_similarity(
    items: Sequence[str], query: str, backend: SimilarityBackend, limit: int
) -> list[str]:
    scored = sorted(items, key=lambda item: (-similarity(backend, query, item), item))
    return scored[:limit]


def _seed_entity_pool(seed_questions: Sequence[Question]) -> list[str]:
    pool: set[str] = set()
    for question in seed_questions:
        if question.entity_tags:
            pool.update(normalize_entity(tag) for tag in question.entity_tags)
    return sorted(tag for tag in pool if tag)


def sample_knowledge_path(
    bundle: GraphBundle,
    seed_questions: Sequence[Question],
    hops: int,
    rng_seed: int,
    backend: SimilarityBackend,
    fanout: int = DEFAULT_FANOUT,
) -> KnowledgePath:
    """Sample one knowledge path of up to ``hops`` hops.

    The path is fully determined by (graph, seeds, hops, rng_seed, backend),
    and stops early only when the current entity has no unvisited neighbor.
    """
    graph = bundle.graph
    if not graph.nodes:
        raise EmptyGraph("cannot sample from an empty graph")
    if hops < 1:
        raise ValueError("hops must be >= 1")

    rng = random.Random(rng_seed)
    seed_query = "\n".join(q.text for q in seed_questions)

    pool = _seed_entity_pool(seed_questions)
    if pool:
        seed_entity = rng.choice(pool)
    elif seed_query.strip():
        seed_entity = seed_query
    else:
        raise NoSeedEntities("no entity tags and no question text to fall back on")

    current = (
        seed_entity
        if seed_entity in graph.nodes
        else most_similar_entity(graph, seed_entity, backend)
    )

    def pick_chunk(entity: str, restrict_to_query: bool) -> str:
        chunk_ids = sorted(graph.nodes[entity].chunk_ids)
        if restrict_to_query:
            texts = {}
            for chunk_id in chunk_ids:
                if chunk_id not in bundle.chunks:
                    raise DanglingChunkId(chunk_id)
                texts[chunk_id] = bundle.chunks[chunk_id].text
            chunk_ids = sorted(
                chunk_ids,
                key=lambda cid: (-similarity(backend, seed_query, texts[cid]), cid),
            )[:fanout]
        return rng.choice(chunk_ids)

    # root hop: uniform over all chunks of the entry entity
    root_chunk = pick_chunk(current, restrict_to_query=False)
    path: list[tuple[str, str]] = [(current, root_chunk)]
    visited = {current}
    candidate_log: list[tuple[str, ...]] = []
    texts = [_chunk_text(bundle, root_chunk)]

    for _ in range(hops - 1):
        unvisited = sorted(graph.edges.get(current, frozenset()) - visited)
        if not unvisited:
            break
        candidates = _top_by_similarity(unvisited, current, backend, fanout)
        candidate_log.append(tuple(candidates))
        current = rng.choice(candidates)
        visited.add(current)
        chunk_id = pick_chunk(current, restrict_to_query=True)
        path.append((current, chunk_id))
        texts.append(_chunk_text(bundle, chunk_id))

    return KnowledgePath(
        hops=tuple(path),
        background_text="\n".join(texts),
        rng_seed=rng_seed,
        entity_candidates=tuple(candidate_log),
    )


def _chunk_text(bundle: GraphBundle, chunk_id: str) -> str:
    if chunk_id not in bundle.chunks:
        raise DanglingChunkId(chunk_id)
    return bundle.chunks[chunk_id].text
