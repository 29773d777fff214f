"""Crash-safe append-only run journal.

Each line is ``<payload-byte-length> <sha256-of-payload> <payload-json>``
where the payload json carries seq, kind, and the entry body. Appends
flush and fsync before acknowledging, so a healthy journal has strictly
increasing gap-free seq numbers and at most one corrupt trailing line
after a crash.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterator

from .errors import ResumeDivergence, UnreadableJournal

logger = logging.getLogger(__name__)

KIND_TRANSCRIPT = "transcript"
KIND_RECORD = "record"
KIND_BATCH_COMPLETE = "batch_complete"
KIND_RUN_COMPLETE = "run_complete"
KIND_EXTRACTION = "extraction"

KINDS = (
    KIND_TRANSCRIPT,
    KIND_RECORD,
    KIND_BATCH_COMPLETE,
    KIND_RUN_COMPLETE,
    KIND_EXTRACTION,
)


@dataclass(frozen=True)
class JournalEntry:
    seq: int
    kind: str
    payload: Any

    def body(self) -> str:
        return json.dumps(
            {"seq": self.seq, "kind": self.kind, "payload": self.payload},
            sort_keys=True,
            ensure_ascii=False,
        )


def _encode_line(entry: JournalEntry) -> bytes:
    body = entry.body().encode("utf-8")
    checksum = hashlib.sha256(body).hexdigest()
    return b"%d %s %s\n" % (len(body), checksum.encode("ascii"), body)


def _decode_line(line: bytes) -> JournalEntry | None:
    """Parse one journal line; None for anything damaged."""
    if not line.endswith(b"\n"):
        return None
    try:
        length_raw, checksum, body = line[:-1].split(b" ", 2)
        if int(length_raw) != len(body):
            return None
        if hashlib.sha256(body).hexdigest().encode("ascii") != checksum:
            return None
        data = json.loads(body.decode("utf-8"))
        return JournalEntry(seq=data["seq"], kind=data["kind"], payload=data["payload"])
    except (ValueError, KeyError, UnicodeDecodeError):
        return None


def scan(path: str | Path) -> tuple[list[JournalEntry], int]:
    """All valid leading entries and the byte offset where validity ends.

    Stops at the first damaged line or seq discontinuity; anything after
    that point is unreachable garbage from a crash.
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise UnreadableJournal(str(exc)) from exc
    entries: list[JournalEntry] = []
    offset = 0
    expected_seq = 1
    while offset < len(raw):
        newline = raw.find(b"\n", offset)
        if newline == -1:
            break
        entry = _decode_line(raw[offset : newline + 1])
        if entry is None or entry.seq != expected_seq:
            break
        entries.append(entry)
        expected_seq += 1
        offset = newline + 1
    if offset < len(raw):
        logger.warning(
            "journal %s: truncating %d corrupt trailing bytes after seq %d",
            path,
            len(raw) - offset,
            expected_seq - 1,
        )
    return entries, offset


class Journal:
    """Writer handle over one journal file.

    Opening for append scans the file, truncates any corrupt tail, and
    continues the seq counter. In resume mode, appends that reproduce an
    already-journaled entry are verified and skipped instead of written,
    so a resumed run converges to the same bytes as an uninterrupted one.
    """

    def __init__(self, path: str | Path, resume: bool = False):
        self.path = Path(path)
        existing: list[JournalEntry] = []
        valid_offset = 0
        if self.path.exists():
            existing, valid_offset = scan(self.path)
            size = self.path.stat().st_size
            if valid_offset < size:
                with self.path.open("r+b") as fh:
                    fh.truncate(valid_offset)
        elif resume:
            raise UnreadableJournal(f"cannot resume: {self.path} does not exist")
        self.entries = existing
        self._next_seq = len(existing) + 1
        self._pending_replay = list(existing) if resume else []
        self._replay_pos = 0
        self._fh = self.path.open("ab")

    @property
    def replaying(self) -> bool:
        return self._replay_pos < len(self._pending_replay)

    def pending_entries(self) -> list[JournalEntry]:
        return self._pending_replay[self._replay_pos :]

    def fast_forward(self, count: int) -> list[JournalEntry]:
        """Advance the replay pointer past entries that will not be
        recomputed (completed batches); returns the skipped entries."""
        end = min(self._replay_pos + count, len(self._pending_replay))
        skipped = self._pending_replay[self._replay_pos : end]
        self._replay_pos = end
        return skipped

    def append(self, kind: str, payload: Any) -> JournalEntry:
        if self.replaying:
            expected = self._pending_replay[self._replay_pos]
            if expected.kind != kind or expected.payload != payload:
                raise ResumeDivergence(
                    f"resumed run recomputed seq {expected.seq} differently "
                    f"(journaled {expected.kind}, recomputed {kind})"
                )
            self._replay_pos += 1
            return expected
        entry = JournalEntry(seq=self._next_seq, kind=kind, payload=payload)
        self._fh.write(_encode_line(entry))
        self._fh.flush()
        os.fsync(self._fh.fileno())
        self._next_seq += 1
        self.entries.append(entry)
        return entry

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "Journal":
        return self

    def __exit__(self, *exc_info: Any) -> None:
        self.close()


def entries_of_kind(entries: list[JournalEntry], kind: str) -> Iterator[JournalEntry]:
    return (entry for entry in entries if entry.kind == kind)


@dataclass(frozen=True)
class ResumePoint:
    """Where a crashed run left off."""

    completed_batches: int
    run_complete: bool
    entries: tuple[JournalEntry, ...]

    @property
    def partial_entries(self) -> tuple[JournalEntry, ...]:
        """Entries after the last batch-complete marker."""
        last = 0
        for i, entry in enumerate(self.entries, start=1):
            if entry.kind == KIND_BATCH_COMPLETE:
                last = i
        return self.entries[last:]


def recover(path: str | Path) -> ResumePoint:
    """Scan a journal and locate the resume point."""
    entries, _ = scan(path)
    completed = sum(1 for e in entries if e.kind == KIND_BATCH_COMPLETE)
    done = any(e.kind == KIND_RUN_COMPLETE for e in entries)
    return ResumePoint(
        completed_batches=completed, run_complete=done, entries=tuple(entries)
    )
