"""Context graph construction against hand-enumerated and brute-force oracles."""

import random

import pytest

from interviewkit.chunking import ChunkPolicy
from interviewkit.errors import DanglingChunkId, ExtractorFailure, UnknownEntity
from interviewkit.graph import (
    build_context_graph,
    chunks_of,
    load_bundle,
    neighbors,
    normalize_entity,
    save_bundle,
)


def test_normalize_entity_folds_case_and_whitespace():
    assert normalize_entity("  Peritonitis ") == "peritonitis"
    assert normalize_entity("Duodenal\t Bulb  Injury") == "duodenal bulb injury"
    assert normalize_entity(normalize_entity(" A  B ")) == normalize_entity(" A  B ")


def test_empty_knowledge_base_builds_empty_graph():
    bundle = build_context_graph([], lambda chunk: [], ChunkPolicy())
    assert len(bundle.graph.nodes) == 0
    assert len(bundle.graph.edges) == 0


def test_two_chunk_enumeration(two_chunk_bundle):
    graph = two_chunk_bundle.graph
    assert sorted(graph.nodes) == ["a", "b", "c"]
    assert graph.nodes["b"].chunk_ids == {"doc1#c0", "doc1#c1"}
    assert graph.nodes["a"].document_ids == {"doc1"}
    # A-B co-chunk, B-C co-chunk, A-C via co-document
    assert neighbors(graph, "A") == {"b", "c"}
    assert neighbors(graph, "B") == {"a", "c"}
    assert neighbors(graph, "C") == {"a", "b"}


def test_second_document_extends_graph(two_doc_bundle):
    graph = two_doc_bundle.graph
    assert sorted(graph.nodes) == ["a", "b", "c", "d"]
    assert neighbors(graph, "D") == {"c"}
    assert neighbors(graph, "B") == {"a", "c"}
    assert neighbors(graph, "C") == {"a", "b", "d"}


def test_neighbors_unknown_entity(two_chunk_bundle):
    with pytest.raises(UnknownEntity):
        neighbors(two_chunk_bundle.graph, "missing")


def test_chunks_of_ordering_and_errors(two_chunk_bundle):
    graph, store = two_chunk_bundle.graph, two_chunk_bundle.chunks
    b_chunks = chunks_of(graph, "B", store)
    assert [c.chunk_id for c in b_chunks] == ["doc1#c0", "doc1#c1"]
    a_chunks = chunks_of(graph, "A", store)
    assert [c.chunk_id for c in a_chunks] == ["doc1#c0"]
    with pytest.raises(UnknownEntity):
        chunks_of(graph, "zz", store)
    broken = dict(store)
    del broken["doc1#c1"]
    with pytest.raises(DanglingChunkId):
        chunks_of(graph, "B", broken)


def test_extractor_failure_aborts_build():
    def failing(chunk):
        raise RuntimeError("provider down")

    with pytest.raises(ExtractorFailure):
        build_context_graph([("d", "Some text here.")], failing, ChunkPolicy())


def random_corpus(rng: random.Random, max_docs=6, max_entities=20):
    """Synthetic corpus plus a deterministic extractor over a fixed table."""
    n_docs = rng.randint(1, max_docs)
    entity_pool = [f"ent{i}" for i in range(rng.randint(1, max_entities))]
    docs = []
    table = {}
    for d in range(n_docs):
        n_sentences = rng.randint(1, 6)
        text = " ".join(f"Sentence {d} {s} filler words." for s in range(n_sentences))
        docs.append((f"doc{d}", text))
    # assign entities per chunk after chunking with the same policy
    policy = ChunkPolicy(target_chars=40, boundary="sentence")
    from interviewkit.chunking import split_to_chunks

    for doc_id, text in docs:
        for chunk in split_to_chunks(doc_id, text, policy):
            table[chunk.chunk_id] = sorted(
                rng.sample(entity_pool, rng.randint(0, min(4, len(entity_pool))))
            )
    return docs, table, policy


def brute_force_edges(table: dict[str, list[str]]) -> set[tuple[str, str]]:
    """O(n^2) pairwise scan: same chunk or same document implies an edge."""
    edges = set()
    ids = list(table)
    for c1 in ids:
        for c2 in ids:
            same_doc = c1.split("#")[0] == c2.split("#")[0]
            if not same_doc:
                continue
            for e1 in table[c1]:
                for e2 in table[c2]:
                    if e1 != e2:
                        edges.add(tuple(sorted((e1, e2))))
    return edges


@pytest.mark.parametrize("seed", range(25))
def test_randomized_builds_match_brute_force(seed):
    rng = random.Random(seed)
    docs, table, policy = random_corpus(rng)
    extractor = lambda chunk: table[chunk.chunk_id]
    bundle = build_context_graph(docs, extractor, policy)
    graph = bundle.graph

    # symmetry and no self-loops
    for entity, nbrs in graph.edges.items():
        assert entity not in nbrs
        for other in nbrs:
            assert entity in graph.edges[other]
            assert other in graph.nodes

    # membership soundness: every (entity, chunk) pair was emitted
    for entity, node in graph.nodes.items():
        for chunk_id in node.chunk_ids:
            assert entity in table[chunk_id]
        for doc_id in node.document_ids:
            assert any(c.startswith(doc_id + "#") for c in node.chunk_ids)

    # co-occurrence completeness against the quadratic oracle
    expected = brute_force_edges(table)
    actual = {
        tuple(sorted((a, b))) for a, nbrs in graph.edges.items() for b in nbrs
    }
    assert actual == expected


def test_rebuild_is_idempotent():
    rng = random.Random(99)
    docs, table, policy = random_corpus(rng)
    extractor = lambda chunk: table[chunk.chunk_id]
    first = build_context_graph(docs, extractor, policy)
    second = build_context_graph(docs, extractor, policy)
    assert first.graph == second.graph
    assert first.chunks == second.chunks
    assert first.corpus_digest == second.corpus_digest


def test_save_load_round_trip(tmp_path, two_doc_bundle):
    path = tmp_path / "graph.ndjson"
    save_bundle(two_doc_bundle, path)
    loaded = load_bundle(path)
    assert loaded.graph == two_doc_bundle.graph
    assert loaded.chunks == two_doc_bundle.chunks
    assert loaded.policy == two_doc_bundle.policy
    assert loaded.corpus_digest == two_doc_bundle.corpus_digest


def test_entity_types_kept_as_annotations():
    def extractor(chunk):
        return [("Geneva", "LOC"), ("geneva", "CITY")]

    bundle = build_context_graph([("d", "Geneva is a city.")], extractor, ChunkPolicy())
    assert sorted(bundle.graph.nodes) == ["geneva"]
    assert bundle.graph.nodes["geneva"].entity_type == "LOC"


def test_extraction_cache_skips_extractor(two_chunk_bundle):
    calls = []

    def extractor(chunk):
        calls.append(chunk.chunk_id)
        return ["X"]

    cache = {
        "doc1#c0": [("a", None), ("b", None)],
        "doc1#c1": [("b", None), ("c", None)],
    }
    bundle = build_context_graph(
        [("doc1", "Alpha beta here. Beta gamma there.")],
        extractor,
        ChunkPolicy(target_chars=17, boundary="sentence"),
        extraction_cache=cache,
    )
    assert calls == []
    assert bundle.graph == two_chunk_bundle.graph
