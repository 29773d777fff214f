"""Journal durability, corruption recovery, and resume verification."""

import random

import pytest

from interviewkit.errors import ResumeDivergence, UnreadableJournal
from interviewkit.journal import (
    KIND_BATCH_COMPLETE,
    KIND_RECORD,
    KIND_RUN_COMPLETE,
    Journal,
    recover,
    scan,
)


def test_appends_assign_consecutive_seqs(tmp_path):
    path = tmp_path / "j.log"
    with Journal(path) as journal:
        seqs = [journal.append(KIND_RECORD, {"i": i}).seq for i in range(3)]
    assert seqs == [1, 2, 3]


def test_reopen_continues_seq(tmp_path):
    path = tmp_path / "j.log"
    with Journal(path) as journal:
        journal.append(KIND_RECORD, {"i": 0})
    with Journal(path) as journal:
        entry = journal.append(KIND_RECORD, {"i": 1})
    assert entry.seq == 2
    entries, _ = scan(path)
    assert [e.seq for e in entries] == [1, 2]


def test_scan_missing_file():
    with pytest.raises(UnreadableJournal):
        scan("/nonexistent/journal.log")


@pytest.mark.parametrize("seed", range(12))
def test_fuzzed_tail_corruption_recovers_prefix(tmp_path, seed):
    """Flip or truncate bytes in the tail; every intact prefix entry survives."""
    path = tmp_path / "j.log"
    with Journal(path) as journal:
        for i in range(6):
            journal.append(KIND_RECORD, {"i": i, "data": "x" * i})
    raw = bytearray(path.read_bytes())
    entries_before, _ = scan(path)
    line_starts = [0]
    for idx, byte in enumerate(raw):
        if byte == ord("\n") and idx + 1 < len(raw):
            line_starts.append(idx + 1)

    rng = random.Random(seed)
    damage_at = rng.choice(line_starts[2:])  # keep at least two entries intact
    mode = rng.choice(["truncate", "flip"])
    if mode == "truncate":
        raw = raw[: damage_at + rng.randint(1, 10)]
    else:
        pos = min(damage_at + rng.randint(0, 20), len(raw) - 1)
        raw[pos] ^= 0xFF
    path.write_bytes(bytes(raw))

    entries, offset = scan(path)
    assert len(entries) >= 2
    assert entries == entries_before[: len(entries)]
    # reopening truncates the damage and appends continue cleanly
    with Journal(path) as journal:
        resumed = journal.append(KIND_RECORD, {"fresh": True})
    assert resumed.seq == len(entries) + 1
    final, _ = scan(path)
    assert [e.seq for e in final] == list(range(1, len(entries) + 2))


def test_resume_verifies_and_skips_duplicates(tmp_path):
    path = tmp_path / "j.log"
    with Journal(path) as journal:
        journal.append(KIND_RECORD, {"i": 0})
        journal.append(KIND_RECORD, {"i": 1})
    size_before = path.stat().st_size

    with Journal(path, resume=True) as journal:
        assert journal.replaying
        journal.append(KIND_RECORD, {"i": 0})
        journal.append(KIND_RECORD, {"i": 1})
        assert not journal.replaying
        journal.append(KIND_RECORD, {"i": 2})
    entries, _ = scan(path)
    assert [e.payload["i"] for e in entries] == [0, 1, 2]
    assert path.stat().st_size > size_before


def test_resume_divergence_detected(tmp_path):
    path = tmp_path / "j.log"
    with Journal(path) as journal:
        journal.append(KIND_RECORD, {"i": 0})
    with Journal(path, resume=True) as journal:
        with pytest.raises(ResumeDivergence):
            journal.append(KIND_RECORD, {"i": 999})


def test_resume_requires_existing_journal(tmp_path):
    with pytest.raises(UnreadableJournal):
        Journal(tmp_path / "missing.log", resume=True)


def test_recover_resume_points(tmp_path):
    path = tmp_path / "j.log"
    with Journal(path) as journal:
        journal.append(KIND_RECORD, {"i": 0})
        journal.append(KIND_BATCH_COMPLETE, {"batch_index": 0})
        journal.append(KIND_RECORD, {"i": 1})  # mid-batch crash here
    point = recover(path)
    assert point.completed_batches == 1
    assert not point.run_complete
    assert [e.kind for e in point.partial_entries] == [KIND_RECORD]

    with Journal(path) as journal:
        journal.append(KIND_BATCH_COMPLETE, {"batch_index": 1})
        journal.append(KIND_RUN_COMPLETE, {"sc": "1/2"})
    done = recover(path)
    assert done.run_complete
    assert done.completed_batches == 2
    assert done.partial_entries[-1].kind == KIND_RUN_COMPLETE


def test_fast_forward_skips_completed_prefix(tmp_path):
    path = tmp_path / "j.log"
    with Journal(path) as journal:
        journal.append(KIND_RECORD, {"i": 0})
        journal.append(KIND_BATCH_COMPLETE, {"batch_index": 0})
        journal.append(KIND_RECORD, {"i": 1})
    with Journal(path, resume=True) as journal:
        skipped = journal.fast_forward(2)
        assert [e.kind for e in skipped] == [KIND_RECORD, KIND_BATCH_COMPLETE]
        # remaining pending entry must still match on append
        journal.append(KIND_RECORD, {"i": 1})
        fresh = journal.append(KIND_RECORD, {"i": 2})
    assert fresh.seq == 4
