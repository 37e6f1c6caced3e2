"""Generation backends: live chat-completion API, record/replay, scripted mocks.

Every request flowing through `complete` is appended to the active transcript
(JSON-lines, one record per request) keyed by a content digest, so a recorded
run can later be replayed byte-identically without network access.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Optional, Protocol, Sequence

import logging

from .errors import BackendError, ReplayMiss

logger = logging.getLogger(__name__)


class Stage(str, Enum):
    HYPOTHESIS = "hypothesis"
    SUMMARIZE = "summarize"
    PROGRAM = "program"
    REVISE = "revise"
    DIRECT = "direct"
    COT = "cot"


# (temperature, max_tokens) per stage; hypothesis and program/revise values
# are the published defaults, the rest are our choices.
STAGE_DEFAULTS: dict[Stage, tuple[float, int]] = {
    Stage.HYPOTHESIS: (1.0, 200),
    Stage.SUMMARIZE: (0.7, 1000),
    Stage.PROGRAM: (0.7, 1000),
    Stage.REVISE: (0.7, 1000),
    Stage.DIRECT: (0.0, 1000),
    Stage.COT: (0.0, 1000),
}


@dataclass(frozen=True)
class ChatMessage:
    role: str  # "system" | "user" | "assistant"
    content: str

    def __post_init__(self):
        if self.role not in ("system", "user", "assistant"):
            raise ValueError(f"bad role {self.role!r}")
        if not self.content:
            raise ValueError("empty message content")


@dataclass(frozen=True)
class GenerationRequest:
    messages: tuple[ChatMessage, ...]
    stage: Stage
    n: int = 1
    temperature: Optional[float] = None
    max_tokens: Optional[int] = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")

    @property
    def effective_temperature(self) -> float:
        if self.temperature is not None:
            return self.temperature
        return STAGE_DEFAULTS[self.stage][0]

    @property
    def effective_max_tokens(self) -> int:
        if self.max_tokens is not None:
            return self.max_tokens
        return STAGE_DEFAULTS[self.stage][1]

    def digest(self) -> str:
        """Content hash identifying this request for record/replay lookup."""
        body = {
            "stage": self.stage.value,
            "messages": [[m.role, m.content] for m in self.messages],
            "temperature": self.effective_temperature,
            "max_tokens": self.effective_max_tokens,
            "n": self.n,
        }
        blob = json.dumps(body, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class TokenUsage:
    prompt_tokens: int = 0
    completion_tokens: int = 0

    def __add__(self, other: "TokenUsage") -> "TokenUsage":
        return TokenUsage(self.prompt_tokens + other.prompt_tokens,
                          self.completion_tokens + other.completion_tokens)


@dataclass
class CompletionResult:
    texts: list[str]
    usage: TokenUsage = field(default_factory=TokenUsage)


class Transcript:
    """Append-only JSON-lines log of every generation request/response."""

    def __init__(self, path: Optional[Path] = None, backend_id: str = "unknown"):
        self.path = Path(path) if path else None
        self.backend_id = backend_id
        self.records: list[dict] = []
        self._lock = threading.Lock()
        if self.path and self.path.exists():
            self.records = [json.loads(line) for line in
                            self.path.read_text().splitlines() if line.strip()]

    def append(self, req: GenerationRequest, result: CompletionResult) -> None:
        record = {
            "digest": req.digest(),
            "backend": self.backend_id,
            "stage": req.stage.value,
            "request": {
                "messages": [{"role": m.role, "content": m.content} for m in req.messages],
                "temperature": req.effective_temperature,
                "max_tokens": req.effective_max_tokens,
                "n": req.n,
            },
            "responses": result.texts,
            "usage": {"prompt_tokens": result.usage.prompt_tokens,
                      "completion_tokens": result.usage.completion_tokens},
            "ts": time.time(),
        }
        with self._lock:
            self.records.append(record)
            if self.path:
                with self.path.open("a") as f:
                    f.write(json.dumps(record) + "\n")

    @classmethod
    def load(cls, path: Path) -> "Transcript":
        t = cls(path=path)
        return t


class Backend(Protocol):
    name: str

    def complete(self, req: GenerationRequest) -> CompletionResult: ...


def _estimate_tokens(text: str) -> int:
    # Rough 4-chars-per-token heuristic; exact counts only matter for live runs,
    # where the API reports them.
    return max(1, len(text) // 4)


def _request_usage(req: GenerationRequest, texts: Sequence[str]) -> TokenUsage:
    prompt = sum(_estimate_tokens(m.content) for m in req.messages)
    completion = sum(_estimate_tokens(t) for t in texts)
    return TokenUsage(prompt, completion)


class ScriptedBackend:
    """Test double driven by a response function or a FIFO queue of texts.

    A callable script receives the request and returns a list of exactly n
    texts; a list script is consumed one text per requested sample.
    """

    name = "scripted"

    def __init__(self, script):
        self._lock = threading.Lock()
        if callable(script):
            self._fn = script
            self._queue = None
        else:
            self._fn = None
            self._queue = list(script)

    def complete(self, req: GenerationRequest) -> CompletionResult:
        with self._lock:
            if self._fn is not None:
                texts = list(self._fn(req))
            else:
                if len(self._queue) < req.n:
                    raise BackendError(
                        f"scripted backend exhausted: need {req.n}, have {len(self._queue)}")
                texts, self._queue = self._queue[:req.n], self._queue[req.n:]
        if len(texts) != req.n:
            raise BackendError(f"script returned {len(texts)} texts, expected {req.n}")
        return CompletionResult(texts, _request_usage(req, texts))


class ReplayBackend:
    """Serves recorded responses by request digest; no network, fully deterministic.

    Repeated identical requests replay the recorded occurrences in order,
    sticking on the last one once exhausted.
    """

    name = "replay"

    def __init__(self, transcript: Transcript):
        self._by_digest: dict[str, list[dict]] = {}
        for rec in transcript.records:
            self._by_digest.setdefault(rec["digest"], []).append(rec)
        self._cursor: dict[str, int] = {}
        self._lock = threading.Lock()

    def complete(self, req: GenerationRequest) -> CompletionResult:
        digest = req.digest()
        with self._lock:
            recs = self._by_digest.get(digest)
            if not recs:
                raise ReplayMiss(f"no recording for digest {digest[:12]} (stage {req.stage.value})")
            i = self._cursor.get(digest, 0)
            rec = recs[min(i, len(recs) - 1)]
            self._cursor[digest] = i + 1
        usage = TokenUsage(rec["usage"]["prompt_tokens"], rec["usage"]["completion_tokens"])
        return CompletionResult(list(rec["responses"]), usage)


class LiveBackend:
    """OpenAI-compatible chat-completions client with bounded retry/backoff."""

    MAX_ATTEMPTS = 5
    BASE_DELAY = 1.0
    MAX_CONCURRENT = 8

    def __init__(self, model: str, base_url: str = "https://api.openai.com/v1",
                 api_key_env: str = "HYPOTHESEARCH_API_KEY",
                 max_concurrent: Optional[int] = None):
        import httpx  # deferred so offline use never needs it configured

        self.name = f"live:{model}"
        self.model = model
        self._client = httpx.Client(base_url=base_url, timeout=120.0)
        api_key = os.environ.get(api_key_env, "")
        self._headers = {"Authorization": f"Bearer {api_key}"}
        self._sem = threading.Semaphore(max_concurrent or self.MAX_CONCURRENT)

    def complete(self, req: GenerationRequest) -> CompletionResult:
        body = {
            "model": self.model,
            "messages": [{"role": m.role, "content": m.content} for m in req.messages],
            "temperature": req.effective_temperature,
            "max_tokens": req.effective_max_tokens,
            "n": req.n,
        }
        delay = self.BASE_DELAY
        last_error = None
        for attempt in range(self.MAX_ATTEMPTS):
            try:
                with self._sem:
                    resp = self._client.post("/chat/completions", json=body,
                                             headers=self._headers)
                if resp.status_code == 200:
                    doc = resp.json()
                    texts = [c["message"]["content"] for c in doc["choices"]]
                    usage = TokenUsage(doc.get("usage", {}).get("prompt_tokens", 0),
                                       doc.get("usage", {}).get("completion_tokens", 0))
                    return CompletionResult(texts, usage)
                if resp.status_code in (429, 500, 502, 503, 504):
                    last_error = f"HTTP {resp.status_code}"
                else:
                    raise BackendError(f"API error {resp.status_code}: {resp.text[:200]}")
            except BackendError:
                raise
            except Exception as e:  # connection/timeout errors are retryable
                last_error = repr(e)
            if attempt < self.MAX_ATTEMPTS - 1:
                time.sleep(delay * (1 + random.random() * 0.25))
                delay *= 2
        raise BackendError(f"exhausted {self.MAX_ATTEMPTS} attempts: {last_error}")


class RecordingBackend:
    """Wraps any backend, mirroring every call into a transcript."""

    def __init__(self, inner: Backend, transcript: Transcript):
        self.inner = inner
        self.name = f"record({inner.name})"
        self.transcript = transcript
        transcript.backend_id = inner.name

    def complete(self, req: GenerationRequest) -> CompletionResult:
        result = self.inner.complete(req)
        self.transcript.append(req, result)
        return result


def complete(req: GenerationRequest, backend: Backend,
             transcript: Optional[Transcript] = None) -> list[str]:
    """Run one generation request, appending it to the transcript if given."""
    result = backend.complete(req)
    if len(result.texts) != req.n:
        raise BackendError(f"backend returned {len(result.texts)} texts, expected {req.n}")
    if transcript is not None:
        transcript.append(req, result)
    return result.texts
