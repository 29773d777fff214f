"""Entity context graph: nodes keyed by normalized entity, untyped
co-occurrence edges, chunk/document membership sets.

Two entities are neighbors when they appear in the same chunk or anywhere
in the same document. Construction is all-or-nothing: an extraction
failure aborts the build and discards the partial graph.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Protocol

from .chunking import Chunk, ChunkPolicy, split_to_chunks
from .errors import DanglingChunkId, ExtractorFailure, UnknownEntity

_WS = re.compile(r"\s+")


def normalize_entity(entity: str) -> str:
    """Case-fold, trim, and collapse internal whitespace.

    Entity strings key graph nodes; without this, surface variants of the
    same entity split into separate nodes.
    """
    return _WS.sub(" ", entity.strip()).casefold()


class EntityExtractor(Protocol):
    """Returns the entities mentioned in a chunk.

    Items may be plain strings or (text, type) pairs; types are kept as
    opaque annotations and never affect node keys.
    """

    def __call__(self, chunk: Chunk) -> Iterable[str | tuple[str, str]]: ...


@dataclass(frozen=True)
class GraphNode:
    """One entity with the ids of the chunks and documents that mention it."""

    entity: str
    chunk_ids: frozenset[str]
    document_ids: frozenset[str]
    entity_type: str | None = None


@dataclass
class ContextGraph:
    """Immutable after build; do not mutate nodes or edges in place."""

    nodes: dict[str, GraphNode] = field(default_factory=dict)
    edges: dict[str, frozenset[str]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.nodes)

    def entities(self) -> list[str]:
        return sorted(self.nodes)

    def has_entity(self, entity: str) -> bool:
        return normalize_entity(entity) in self.nodes


@dataclass
class GraphBundle:
    """A built graph together with its chunk store and build parameters."""

    graph: ContextGraph
    chunks: dict[str, Chunk]
    policy: ChunkPolicy
    corpus_digest: str


def corpus_digest(knowledge_base: Iterable[tuple[str, str]]) -> str:
    h = hashlib.sha256()
    for doc_id, text in knowledge_base:
        h.update(doc_id.encode("utf-8"))
        h.update(b"\x00")
        h.update(text.encode("utf-8"))
        h.update(b"\x00")
    return h.hexdigest()


def _normalize_extraction(
    raw: Iterable[str | tuple[str, str]],
) -> list[tuple[str, str | None]]:
    seen: dict[str, str | None] = {}
    for item in raw:
        if isinstance(item, str):
            text, etype = item, None
        else:
            text, etype = item[0], item[1]
        key = normalize_entity(text)
        if not key:
            continue
        if key not in seen:
            seen[key] = etype
    return sorted(seen.items())


def build_context_graph(
    knowledge_base: list[tuple[str, str]],
    extractor: EntityExtractor,
    policy: ChunkPolicy | None = None,
    extraction_cache: Mapping[str, list] | None = None,
    on_extraction: Callable[[Chunk, list[tuple[str, str | None]]], None] | None = None,
) -> GraphBundle:
    """Chunk every document, extract entities, and link co-occurrences.

    ``extraction_cache`` maps chunk ids to previously journaled extraction
    results, used by resumed builds to skip repeat extractor calls.
    ``on_extraction`` observes each fresh or cached extraction, in order.
    """
    policy = policy or ChunkPolicy()
    doc_ids = [doc_id for doc_id, _ in knowledge_base]
    if len(set(doc_ids)) != len(doc_ids):
        raise ValueError("document ids must be unique")

    chunk_store: dict[str, Chunk] = {}
    node_chunks: dict[str, set[str]] = {}
    node_docs: dict[str, set[str]] = {}
    node_types: dict[str, str | None] = {}
    edges: dict[str, set[str]] = {}

    def link_all(entities: list[str]) -> None:
        for a in entities:
            edges[a].update(e for e in entities if e != a)

    for doc_id, text in knowledge_base:
        doc_entities: set[str] = set()
        for chunk in split_to_chunks(doc_id, text, policy):
            chunk_store[chunk.chunk_id] = chunk
            if extraction_cache is not None and chunk.chunk_id in extraction_cache:
                extracted = [
                    (e, t) for e, t in extraction_cache[chunk.chunk_id]
                ]
            else:
                try:
                    extracted = _normalize_extraction(extractor(chunk))
                except ExtractorFailure:
                    raise
                except Exception as exc:
                    raise ExtractorFailure(chunk.chunk_id, str(exc)) from exc
            if on_extraction is not None:
                on_extraction(chunk, extracted)
            chunk_entities = [e for e, _ in extracted]
            for entity, etype in extracted:
                node_chunks.setdefault(entity, set()).add(chunk.chunk_id)
                node_docs.setdefault(entity, set()).add(doc_id)
                edges.setdefault(entity, set())
                if node_types.get(entity) is None:
                    node_types[entity] = etype
            link_all(chunk_entities)
            doc_entities.update(chunk_entities)
        link_all(sorted(doc_entities))

    graph = ContextGraph(
        nodes={
            entity: GraphNode(
                entity=entity,
                chunk_ids=frozenset(node_chunks[entity]),
                document_ids=frozenset(node_docs[entity]),
                entity_type=node_types.get(entity),
            )
            for entity in sorted(node_chunks)
        },
        edges={entity: frozenset(edges[entity]) for entity in sorted(edges)},
    )
    return GraphBundle(
        graph=graph,
        chunks=chunk_store,
        policy=policy,
        corpus_digest=corpus_digest(knowledge_base),
    )


def neighbors(graph: ContextGraph, entity: str) -> set[str]:
    """Neighbor entities of ``entity``; never contains the entity itself."""
    key = normalize_entity(entity)
    if key not in graph.nodes:
        raise UnknownEntity(entity)
    return set(graph.edges.get(key, frozenset()))


def chunks_of(
    graph: ContextGraph, entity: str, resolver: Mapping[str, Chunk]
) -> list[Chunk]:
    """All member chunks of an entity, in chunk-id order."""
    key = normalize_entity(entity)
    if key not in graph.nodes:
        raise UnknownEntity(entity)
    chunks = []
    for chunk_id in sorted(graph.nodes[key].chunk_ids):
        if chunk_id not in resolver:
            raise DanglingChunkId(chunk_id)
        chunks.append(resolver[chunk_id])
    return chunks


GRAPH_FORMAT_VERSION = 1


def save_bundle(bundle: GraphBundle, path: str | Path) -> None:
    """Write the graph file: header, then chunk, node, and edge records."""
    path = Path(path)
    lines = [
        {
            "kind": "header",
            "version": GRAPH_FORMAT_VERSION,
            "policy": bundle.policy.to_payload(),
            "corpus_digest": bundle.corpus_digest,
        }
    ]
    for chunk_id in sorted(bundle.chunks):
        lines.append({"kind": "chunk", **bundle.chunks[chunk_id].to_payload()})
    for entity in bundle.graph.entities():
        node = bundle.graph.nodes[entity]
        row = {
            "kind": "node",
            "entity": entity,
            "chunk_ids": sorted(node.chunk_ids),
            "document_ids": sorted(node.document_ids),
        }
        if node.entity_type is not None:
            row["entity_type"] = node.entity_type
        lines.append(row)
    edge_rows = sorted(
        {tuple(sorted((a, b))) for a, bs in bundle.graph.edges.items() for b in bs}
    )
    for a, b in edge_rows:
        lines.append({"kind": "edge", "a": a, "b": b})
    with path.open("w", encoding="utf-8") as fh:
        for row in lines:
            fh.write(json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n")


def load_bundle(path: str | Path) -> GraphBundle:
    path = Path(path)
    chunks: dict[str, Chunk] = {}
    nodes: dict[str, GraphNode] = {}
    edges: dict[str, set[str]] = {}
    policy = ChunkPolicy()
    digest = ""
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            row = json.loads(line)
            kind = row.pop("kind")
            if kind == "header":
                if row["version"] != GRAPH_FORMAT_VERSION:
                    raise ValueError(f"unsupported graph format version {row['version']}")
                policy = ChunkPolicy.from_payload(row["policy"])
                digest = row["corpus_digest"]
            elif kind == "chunk":
                chunk = Chunk.from_payload(row)
                chunks[chunk.chunk_id] = chunk
            elif kind == "node":
                nodes[row["entity"]] = GraphNode(
                    entity=row["entity"],
                    chunk_ids=frozenset(row["chunk_ids"]),
                    document_ids=frozenset(row["document_ids"]),
                    entity_type=row.get("entity_type"),
                )
                edges.setdefault(row["entity"], set())
            elif kind == "edge":
                edges.setdefault(row["a"], set()).add(row["b"])
                edges.setdefault(row["b"], set()).add(row["a"])
    graph = ContextGraph(
        nodes=nodes, edges={e: frozenset(ns) for e, ns in edges.items()}
    )
    return GraphBundle(graph=graph, chunks=chunks, policy=policy, corpus_digest=digest)
