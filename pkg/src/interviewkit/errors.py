"""Exception taxonomy shared across the package.

Domain errors derive from :class:`InterviewError` so the CLI can map them
to exit code 1 while genuine bugs still surface as ordinary tracebacks.
"""

from __future__ import annotations


class InterviewError(Exception):
    """Base class for every domain-level failure."""


# --- corpus / graph ---------------------------------------------------------

class EmptyDocument(InterviewError):
    """Chunking input was empty after whitespace trimming."""


class ExtractorFailure(InterviewError):
    """Entity extraction failed for a chunk after retries; the build aborts."""

    def __init__(self, chunk_id: str, reason: str = ""):
        self.chunk_id = chunk_id
        super().__init__(f"entity extraction failed for chunk {chunk_id!r}" + (f": {reason}" if reason else ""))


class UnknownEntity(InterviewError):
    """Entity not present in the context graph."""


class DanglingChunkId(InterviewError):
    """A chunk id stored in the graph is missing from the chunk store."""


class EmptyGraph(InterviewError):
    """Operation requires a graph with at least one node."""


class NoSeedEntities(InterviewError):
    """No seed entities available and no fallback query text."""


# --- gateway ----------------------------------------------------------------

class GatewayError(InterviewError):
    """Base class for model-provider failures."""


class ProviderExhausted(GatewayError):
    """All retry attempts against a provider failed."""


class ServiceUnavailable(GatewayError):
    """Embedding service unreachable after retries."""


class AuthMissing(GatewayError):
    """The environment variable named by an endpoint's auth_ref is unset."""


class NoJsonFound(GatewayError):
    """Response text contains no JSON object at all."""

    def __init__(self, raw: str):
        self.raw = raw
        super().__init__("no JSON object found in model response")


class MalformedJson(GatewayError):
    """Response text contains braces but no parseable JSON object."""

    def __init__(self, raw: str):
        self.raw = raw
        super().__init__("malformed JSON in model response")


class AnswerUnavailable(GatewayError):
    """Target model produced no usable answer for a question."""


class GenerationFailed(GatewayError):
    """Extended-question generation failed; the round is skipped."""


class FeedbackFailed(GatewayError):
    """Feedback generation failed; the dossier is marked degraded."""


class JudgeUnavailable(GatewayError):
    """LLM-judge mode could not reach the core model."""


# --- scoring ----------------------------------------------------------------

class NoAnswers(InterviewError):
    """Average score is undefined before any answer has been folded."""


class InvalidLevel(InterviewError):
    """There is no level above the hardest one."""


# --- datasets ---------------------------------------------------------------

class EmptyDataset(InterviewError):
    """Dataset contained no questions."""


class SchemaError(InterviewError):
    """A question file line failed to parse or violated the schema."""

    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class MissingCorpus(InterviewError):
    """Manifest points at a corpus file that does not exist."""


class OutOfRange(InterviewError):
    """Human accuracy must lie in [0, 1]."""


# --- persistence ------------------------------------------------------------

class UnreadableJournal(InterviewError):
    """Journal file missing or unreadable."""


class ResumeDivergence(InterviewError):
    """A resumed run recomputed an entry that differs from the journaled one."""


class RunAlreadyComplete(InterviewError):
    """Journal ends with a run-complete marker; refusing to re-execute."""


# --- validation -------------------------------------------------------------

class NoTransferableSuggestions(InterviewError):
    """No related question outside the batch carries a usable suggestion."""


# --- configuration ----------------------------------------------------------

class ConfigError(InterviewError):
    """Configuration file is missing, malformed, or fails validation."""
