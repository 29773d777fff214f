"""Uniform interface to chat-completion providers plus deterministic mocks.

Every completed call (successful or exhausted) journals exactly one
transcript through the caller-provided sink. Secrets are only ever read
from the environment variable named by an endpoint's ``auth_ref`` and are
never serialized.
"""

from __future__ import annotations

import enum
import hashlib
import json
import os
import random
import re
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from threading import Lock
from typing import Any, Callable, Protocol

from .errors import (
    AnswerUnavailable,
    AuthMissing,
    MalformedJson,
    NoJsonFound,
    ProviderExhausted,
    ServiceUnavailable,
)
from .prompts import render_query
from .records import NO_ANSWER_SENTINEL, Question


class EndpointRole(enum.Enum):
    CORE = "core"
    TARGET = "target"
    EMBEDDING = "embedding"


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    backoff_base_ms: int = 250
    backoff_cap_ms: int = 10_000


@dataclass(frozen=True)
class RequestParams:
    temperature: float = 0.0
    max_tokens: int = 1024
    timeout_ms: int = 60_000


@dataclass(frozen=True)
class ModelEndpoint:
    """Provider coordinates for one model role.

    ``auth_ref`` names the environment variable holding the API key; the
    key itself never appears in configs, journals, or reports.
    ``rate_limit_per_minute`` of None disables rate limiting (mock runs).
    """

    role: EndpointRole
    model_name: str
    base_url: str = ""
    auth_ref: str = ""
    params: RequestParams = RequestParams()
    retry: RetryPolicy = RetryPolicy()
    rate_limit_per_minute: int | None = None

    @property
    def key(self) -> str:
        return f"{self.role.value}:{self.base_url}:{self.model_name}"


@dataclass(frozen=True)
class Transcript:
    """Journal record of one gateway call."""

    request_digest: str
    prompt: str
    raw_response: str
    latency_ms: int
    attempt_count: int

    def to_payload(self) -> dict[str, Any]:
        return {
            "request_digest": self.request_digest,
            "prompt": self.prompt,
            "raw_response": self.raw_response,
            "latency_ms": self.latency_ms,
            "attempt_count": self.attempt_count,
        }

    @classmethod
    def from_payload(cls, payload: dict[str, Any]) -> "Transcript":
        return cls(
            request_digest=payload["request_digest"],
            prompt=payload["prompt"],
            raw_response=payload["raw_response"],
            latency_ms=payload["latency_ms"],
            attempt_count=payload["attempt_count"],
        )


def request_digest(endpoint: ModelEndpoint, prompt: str) -> str:
    material = json.dumps(
        {
            "base_url": endpoint.base_url,
            "model": endpoint.model_name,
            "prompt": prompt,
            "temperature": endpoint.params.temperature,
            "max_tokens": endpoint.params.max_tokens,
        },
        sort_keys=True,
        ensure_ascii=False,
    )
    return hashlib.sha256(material.encode("utf-8")).hexdigest()


class TransportError(Exception):
    """Retryable transport-level failure (connection error, 5xx, 429)."""


class Transport(Protocol):
    def complete(self, endpoint: ModelEndpoint, prompt: str) -> str: ...

    def embed(self, endpoint: ModelEndpoint, text: str) -> list[float]: ...


class HttpTransport:
    """Provider-agnostic chat-completions-over-HTTPS transport."""

    def __init__(self) -> None:
        import requests

        self._session = requests.Session()

    def _headers(self, endpoint: ModelEndpoint) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if endpoint.auth_ref:
            secret = os.environ.get(endpoint.auth_ref, "")
            if not secret:
                raise AuthMissing(f"environment variable {endpoint.auth_ref!r} is unset")
            headers["Authorization"] = f"Bearer {secret}"
        return headers

    def _post(self, endpoint: ModelEndpoint, path: str, body: dict) -> dict:
        import requests

        url = endpoint.base_url.rstrip("/") + path
        try:
            response = self._session.post(
                url,
                json=body,
                headers=self._headers(endpoint),
                timeout=endpoint.params.timeout_ms / 1000,
            )
        except requests.RequestException as exc:
            raise TransportError(str(exc)) from exc
        if response.status_code == 429 or response.status_code >= 500:
            raise TransportError(f"HTTP {response.status_code}")
        response.raise_for_status()
        return response.json()

    def complete(self, endpoint: ModelEndpoint, prompt: str) -> str:
        data = self._post(
            endpoint,
            "/chat/completions",
            {
                "model": endpoint.model_name,
                "messages": [{"role": "user", "content": prompt}],
                "temperature": endpoint.params.temperature,
                "max_tokens": endpoint.params.max_tokens,
            },
        )
        return data["choices"][0]["message"]["content"]

    def embed(self, endpoint: ModelEndpoint, text: str) -> list[float]:
        data = self._post(
            endpoint, "/embeddings", {"model": endpoint.model_name, "input": text}
        )
        return data["data"][0]["embedding"]


@dataclass
class ScriptRule:
    """One scripted response: matches by request digest or prompt regex."""

    response: str
    digest: str | None = None
    regex: str | None = None
    fail_count: int = 0
    kind: str = "chat"  # "chat" or "embed"

    def matches(self, digest: str, prompt: str) -> bool:
        if self.digest is not None:
            return self.digest == digest
        if self.regex is not None:
            return re.search(self.regex, prompt, re.DOTALL) is not None
        return False


class ScriptMiss(Exception):
    """No scripted rule matched the prompt; raised only by mocks."""


class ScriptedTransport:
    """Deterministic mock transport driven by an ordered rule list.

    Rules are matched in order, first match wins; a rule's ``fail_count``
    makes its first N matching calls raise a retryable transport error.
    """

    def __init__(self, rules: list[ScriptRule]):
        self.rules = rules
        self._failures_left = [rule.fail_count for rule in rules]
        self.calls: list[str] = []

    @classmethod
    def from_script_file(cls, path: str | Path) -> "ScriptedTransport":
        rules = []
        with Path(path).open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                row = json.loads(line)
                response = row["response"]
                if not isinstance(response, str):
                    response = json.dumps(response, ensure_ascii=False)
                rules.append(
                    ScriptRule(
                        response=response,
                        digest=row.get("digest"),
                        regex=row.get("regex"),
                        fail_count=row.get("fail_count", 0),
                        kind=row.get("kind", "chat"),
                    )
                )
        return cls(rules)

    def _lookup(self, endpoint: ModelEndpoint, text: str, kind: str) -> str:
        digest = request_digest(endpoint, text)
        self.calls.append(text)
        for i, rule in enumerate(self.rules):
            if rule.kind != kind or not rule.matches(digest, text):
                continue
            if self._failures_left[i] > 0:
                self._failures_left[i] -= 1
                raise TransportError("scripted failure")
            return rule.response
        raise ScriptMiss(f"no scripted {kind} rule matches: {text[:120]!r}")

    def complete(self, endpoint: ModelEndpoint, prompt: str) -> str:
        return self._lookup(endpoint, prompt, "chat")

    def embed(self, endpoint: ModelEndpoint, text: str) -> list[float]:
        return json.loads(self._lookup(endpoint, text, "embed"))


class ReplayTransport:
    """Replays journaled transcripts by request digest.

    Running the pipeline against this transport reproduces the original
    run's downstream artifacts byte for byte.
    """

    def __init__(self, transcripts: list[Transcript]):
        self._by_digest = {t.request_digest: t.raw_response for t in transcripts}

    def complete(self, endpoint: ModelEndpoint, prompt: str) -> str:
        digest = request_digest(endpoint, prompt)
        if digest not in self._by_digest:
            raise TransportError(f"no journaled response for digest {digest[:12]}")
        return self._by_digest[digest]

    def embed(self, endpoint: ModelEndpoint, text: str) -> list[float]:
        return json.loads(self.complete(endpoint, text))


class RateLimiter:
    """Sliding-window limiter: at most ``limit`` admissions per window."""

    def __init__(
        self,
        limit: int,
        window_s: float = 60.0,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.limit = limit
        self.window_s = window_s
        self.clock = clock
        self.sleep = sleep
        self._admitted: deque[float] = deque()
        self._lock = Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self.clock()
                while self._admitted and now - self._admitted[0] >= self.window_s:
                    self._admitted.popleft()
                if len(self._admitted) < self.limit:
                    self._admitted.append(now)
                    return
                wait = self.window_s - (now - self._admitted[0])
            self.sleep(max(wait, 0.001))


TranscriptSink = Callable[[Transcript], None]


class Gateway:
    """Retrying, rate-limited front door to all model endpoints.

    Shareable across threads; the limiter and replay queue are internally
    synchronized. Inject ``clock`` and ``sleep`` for deterministic tests;
    a clock of None records zero latency.
    """

    def __init__(
        self,
        transport: Transport,
        clock: Callable[[], float] | None = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
        jitter_rng: random.Random | None = None,
    ):
        self.transport = transport
        self.clock = clock
        self.sleep = sleep
        self.jitter_rng = jitter_rng or random.Random(0)
        self._limiters: dict[str, RateLimiter] = {}
        self._replay: dict[str, deque[Transcript]] = {}
        self._lock = Lock()

    def preload_replay(self, transcripts: list[Transcript]) -> None:
        """Feed journaled transcripts from a resumed run; matching calls
        return the journaled response without touching the transport."""
        with self._lock:
            for t in transcripts:
                self._replay.setdefault(t.request_digest, deque()).append(t)

    def _limiter_for(self, endpoint: ModelEndpoint) -> RateLimiter | None:
        if endpoint.rate_limit_per_minute is None:
            return None
        with self._lock:
            if endpoint.key not in self._limiters:
                self._limiters[endpoint.key] = RateLimiter(
                    endpoint.rate_limit_per_minute,
                    clock=self.clock or time.monotonic,
                    sleep=self.sleep,
                )
            return self._limiters[endpoint.key]

    def _backoff(self, endpoint: ModelEndpoint, attempt: int) -> None:
        base = endpoint.retry.backoff_base_ms * (2**attempt)
        capped = min(base, endpoint.retry.backoff_cap_ms)
        jittered = capped * (0.5 + self.jitter_rng.random() / 2)
        self.sleep(jittered / 1000)

    def _call(
        self,
        endpoint: ModelEndpoint,
        text: str,
        call: Callable[[], Any],
        sink: TranscriptSink | None,
        exhausted_error: type[Exception],
    ) -> Any:
        digest = request_digest(endpoint, text)
        with self._lock:
            queue = self._replay.get(digest)
            replayed = queue.popleft() if queue else None
        if replayed is not None:
            if sink is not None:
                sink(replayed)
            return replayed.raw_response

        started = self.clock() if self.clock else None
        attempts = 0
        last_error: Exception | None = None
        while attempts < endpoint.retry.max_attempts:
            limiter = self._limiter_for(endpoint)
            if limiter is not None:
                limiter.acquire()
            attempts += 1
            try:
                result = call()
            except TransportError as exc:
                last_error = exc
                if attempts < endpoint.retry.max_attempts:
                    self._backoff(endpoint, attempts - 1)
                continue
            latency = int(((self.clock() - started) * 1000)) if started is not None else 0
            if sink is not None:
                raw = result if isinstance(result, str) else json.dumps(result)
                sink(Transcript(digest, text, raw, latency, attempts))
            return result
        latency = int(((self.clock() - started) * 1000)) if started is not None else 0
        if sink is not None:
            sink(Transcript(digest, text, "", latency, attempts))
        raise exhausted_error(f"{endpoint.key}: {last_error}")

    def complete(
        self, endpoint: ModelEndpoint, prompt: str, sink: TranscriptSink | None = None
    ) -> str:
        """Provider text for a prompt, retrying transient failures with
        jittered exponential backoff."""
        return self._call(
            endpoint,
            prompt,
            lambda: self.transport.complete(endpoint, prompt),
            sink,
            ProviderExhausted,
        )

    def embed(
        self, endpoint: ModelEndpoint, text: str, sink: TranscriptSink | None = None
    ) -> list[float]:
        result = self._call(
            endpoint,
            text,
            lambda: self.transport.embed(endpoint, text),
            sink,
            ServiceUnavailable,
        )
        if isinstance(result, str):
            return json.loads(result)
        return result


_decoder = json.JSONDecoder()


def extract_json_payload(raw: str) -> dict:
    """First balanced top-level JSON object in the text.

    Tolerates leading/trailing prose and fenced code blocks: scanning
    starts at each '{' until one parses.
    """
    start = raw.find("{")
    if start == -1:
        raise NoJsonFound(raw)
    pos = start
    while pos != -1:
        try:
            value, _ = _decoder.raw_decode(raw, pos)
        except ValueError:
            pos = raw.find("{", pos + 1)
            continue
        if isinstance(value, dict):
            return value
        pos = raw.find("{", pos + 1)
    raise MalformedJson(raw)


def answer_question(
    gateway: Gateway,
    endpoint: ModelEndpoint,
    question: Question,
    suggestions: str | None = None,
    with_background: bool = True,
    sink: TranscriptSink | None = None,
) -> str:
    """Ask the target model one question and extract its answer string.

    Raises AnswerUnavailable on gateway or parse failure; callers record
    such questions as incorrect with the no-answer sentinel.
    """
    prompt = render_query(question, suggestions, with_background=with_background)
    try:
        raw = gateway.complete(endpoint, prompt, sink=sink)
        payload = extract_json_payload(raw)
    except (ProviderExhausted, NoJsonFound, MalformedJson) as exc:
        raise AnswerUnavailable(str(exc)) from exc
    if "answer" not in payload:
        raise AnswerUnavailable("response object has no 'answer' field")
    answer = payload["answer"]
    return answer if isinstance(answer, str) else json.dumps(answer, ensure_ascii=False)


def answer_or_sentinel(
    gateway: Gateway,
    endpoint: ModelEndpoint,
    question: Question,
    suggestions: str | None = None,
    with_background: bool = True,
    sink: TranscriptSink | None = None,
) -> str:
    try:
        return answer_question(
            gateway, endpoint, question, suggestions, with_background, sink
        )
    except AnswerUnavailable:
        return NO_ANSWER_SENTINEL
