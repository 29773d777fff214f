"""Split documents into chunks at sentence or paragraph boundaries.

Chunks are exact substrings of the source document, so concatenating the
chunk texts (modulo the whitespace between them) reconstructs it.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import EmptyDocument

Span = tuple[int, int]

_SENTENCE_END = re.compile(r"[.!?]+(?=\s|$)")
_PARAGRAPH_GAP = re.compile(r"\n[ \t]*\n+")


@dataclass(frozen=True)
class ChunkPolicy:
    """Target chunk size and the boundary kind chunks must end on."""

    target_chars: int = 800
    boundary: str = "paragraph"  # "sentence" or "paragraph"

    def __post_init__(self) -> None:
        if self.target_chars < 1:
            raise ValueError("target_chars must be positive")
        if self.boundary not in ("sentence", "paragraph"):
            raise ValueError(f"unknown boundary kind {self.boundary!r}")

    def to_payload(self) -> dict:
        return {"target_chars": self.target_chars, "boundary": self.boundary}

    @classmethod
    def from_payload(cls, payload: dict) -> "ChunkPolicy":
        return cls(target_chars=payload["target_chars"], boundary=payload["boundary"])


@dataclass(frozen=True)
class Chunk:
    """A contiguous slice of one source document."""

    chunk_id: str
    document_id: str
    text: str
    char_span: Span

    def to_payload(self) -> dict:
        return {
            "chunk_id": self.chunk_id,
            "document_id": self.document_id,
            "text": self.text,
            "start": self.char_span[0],
            "end": self.char_span[1],
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "Chunk":
        return cls(
            chunk_id=payload["chunk_id"],
            document_id=payload["document_id"],
            text=payload["text"],
            char_span=(payload["start"], payload["end"]),
        )


def _trim(text: str, start: int, end: int) -> Span | None:
    seg = text[start:end]
    stripped = seg.strip()
    if not stripped:
        return None
    lead = len(seg) - len(seg.lstrip())
    trail = len(seg) - len(seg.rstrip())
    return (start + lead, end - trail)


def sentence_spans(text: str, start: int = 0, end: int | None = None) -> list[Span]:
    """Spans of sentences in text[start:end].

    A sentence ends at a run of . ! ? followed by whitespace or the end of
    the region; text after the last terminator forms a final sentence.
    """
    if end is None:
        end = len(text)
    spans: list[Span] = []
    cursor = start
    for match in _SENTENCE_END.finditer(text, start, end):
        span = _trim(text, cursor, match.end())
        if span:
            spans.append(span)
        cursor = match.end()
    tail = _trim(text, cursor, end)
    if tail:
        spans.append(tail)
    return spans


def paragraph_spans(text: str) -> list[Span]:
    """Spans of paragraphs, separated by blank lines."""
    spans: list[Span] = []
    cursor = 0
    for match in _PARAGRAPH_GAP.finditer(text):
        span = _trim(text, cursor, match.start())
        if span:
            spans.append(span)
        cursor = match.end()
    tail = _trim(text, cursor, len(text))
    if tail:
        spans.append(tail)
    return spans


def _unit_spans(text: str, policy: ChunkPolicy) -> list[Span]:
    if policy.boundary == "sentence":
        return sentence_spans(text)
    units: list[Span] = []
    for start, end in paragraph_spans(text):
        if end - start > policy.target_chars:
            # oversize paragraph: fall back to its sentences so the
            # packed-chunk size bound still holds
            units.extend(sentence_spans(text, start, end))
        else:
            units.append((start, end))
    return units


def split_to_chunks(
    document_id: str, document_text: str, policy: ChunkPolicy
) -> list[Chunk]:
    """Greedily pack boundary units into chunks of about target_chars.

    A chunk closes before the unit that would push it past the target, so
    chunks only exceed the target when a single sentence does.
    """
    if not document_text.strip():
        raise EmptyDocument(f"document {document_id!r} is empty")
    units = _unit_spans(document_text, policy)
    groups: list[Span] = []
    cur_start, cur_end = units[0]
    for start, end in units[1:]:
        if end - cur_start > policy.target_chars:
            groups.append((cur_start, cur_end))
            cur_start = start
        cur_end = end
    groups.append((cur_start, cur_end))
    return [
        Chunk(
            chunk_id=f"{document_id}#c{i}",
            document_id=document_id,
            text=document_text[start:end],
            char_span=(start, end),
        )
        for i, (start, end) in enumerate(groups)
    ]
