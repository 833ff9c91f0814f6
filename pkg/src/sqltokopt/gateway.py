"""Model access behind a backend boundary: replay cache, echo mock, HTTP."""
from __future__ import annotations

import enum
import hashlib
import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Optional, Protocol, Union

import httpx

from sqltokopt.core.counting import TokenCounter, count_tokens
from sqltokopt.errors import CacheMiss, ConflictingRecording, ProviderError, Timeout

log = logging.getLogger(__name__)

DEFAULT_MODEL = "gpt-4o"
_SEP = "\x1f"


class BackendKind(enum.Enum):
    REPLAY = "Replay"
    MOCK = "Mock"
    HTTP = "Http"


@dataclass(frozen=True)
class GenerationRequest:
    prompt: str
    system_prompt: str
    model_name: str = DEFAULT_MODEL
    temperature: float = 0.0

    def __post_init__(self):
        if not self.prompt:
            raise ValueError("prompt must be non-empty")

    @property
    def key(self) -> str:
        return cache_key(self)


@dataclass(frozen=True)
class GenerationResult:
    text: str
    output_tokens: int
    backend: BackendKind
    cache_key: str


def cache_key(request: GenerationRequest) -> str:
    """SHA-256 over system, prompt, model and temperature, 0x1F-separated."""
    material = _SEP.join(
        [request.system_prompt, request.prompt, request.model_name, repr(float(request.temperature))]
    )
    return hashlib.sha256(material.encode("utf-8")).hexdigest()


class Backend(Protocol):
    kind: BackendKind

    def generate(self, request: GenerationRequest) -> GenerationResult: ...


def _result(text: str, kind: BackendKind, request: GenerationRequest, counter: Optional[TokenCounter]):
    return GenerationResult(text, count_tokens(text, counter), kind, cache_key(request))


class ReplayCache:
    """Append-only JSONL store of recorded responses."""

    def __init__(self, path: Optional[Union[str, Path]] = None):
        self.path = Path(path) if path is not None else None
        self._entries: Dict[str, dict] = {}
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            with self.path.open(encoding="utf-8") as fh:
                for n, line in enumerate(fh, 1):
                    if not line.strip():
                        continue
                    entry = json.loads(line)
                    old = self._entries.get(entry["key"])
                    if old is not None and old["response"] != entry["response"]:
                        raise ConflictingRecording(entry["key"])
                    self._entries[entry["key"]] = entry

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: str) -> bool:
        return key in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, key: str) -> str:
        try:
            return self._entries[key]["response"]
        except KeyError:
            raise CacheMiss(key) from None

    def record(self, request: GenerationRequest, response: str) -> bool:
        """Store *response*; returns False when the identical pair is already there."""
        key = cache_key(request)
        with self._lock:
            old = self._entries.get(key)
            if old is not None:
                if old["response"] != response:
                    raise ConflictingRecording(key)
                return False
            entry = {"key": key, "model": request.model_name, "response": response}
            self._entries[key] = entry
            if self.path is not None:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(entry, ensure_ascii=False) + "\n")
            return True


class ReplayBackend:
    kind = BackendKind.REPLAY

    def __init__(self, cache: ReplayCache, counter: Optional[TokenCounter] = None):
        self.cache = cache
        self.counter = counter

    def generate(self, request: GenerationRequest) -> GenerationResult:
        return _result(self.cache.get(cache_key(request)), self.kind, request, self.counter)


_SCAFFOLD = re.compile(r"(META|LEGEND|SPEC|RULES|SCHEMA) ")


def sql_payload(prompt: str) -> str:
    """The prompt minus leading metadata, legend and context lines."""
    lines = prompt.split("\n")
    while len(lines) > 1 and _SCAFFOLD.match(lines[0]):
        lines.pop(0)
    return "\n".join(lines)


class MockBackend:
    """Identity generator: echoes the SQL payload of the prompt."""

    kind = BackendKind.MOCK

    def __init__(self, counter: Optional[TokenCounter] = None):
        self.counter = counter

    def generate(self, request: GenerationRequest) -> GenerationResult:
        return _result(sql_payload(request.prompt), self.kind, request, self.counter)


class HttpBackend:
    """OpenAI-style chat-completion client with bounded retries and concurrency."""

    kind = BackendKind.HTTP

    def __init__(
        self,
        url: str,
        api_key_env: str = "LLM_API_KEY",
        timeout: float = 60.0,
        attempts: int = 3,
        backoff: float = 1.0,
        max_in_flight: int = 4,
        max_output_tokens: Optional[int] = None,
        counter: Optional[TokenCounter] = None,
        transport: Optional[httpx.BaseTransport] = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.url = url
        self.api_key_env = api_key_env
        self.attempts = attempts
        self.backoff = backoff
        self.max_output_tokens = max_output_tokens
        self.counter = counter
        self._sleep = sleep
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def close(self) -> None:
        self._client.close()

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def payload(self, request: GenerationRequest) -> dict:
        body = {
            "model": request.model_name,
            "temperature": request.temperature,
            "messages": [
                {"role": "system", "content": request.system_prompt},
                {"role": "user", "content": request.prompt},
            ],
        }
        if self.max_output_tokens is not None:
            body["max_tokens"] = self.max_output_tokens
        return body

    def generate(self, request: GenerationRequest) -> GenerationResult:
        body = self.payload(request)
        last: Exception = ProviderError(0, "no attempt made")
        with self._slots:
            for attempt in range(self.attempts):
                if attempt:
                    self._sleep(self.backoff * 2 ** (attempt - 1))
                try:
                    resp = self._client.post(self.url, json=body, headers=self._headers())
                except httpx.TimeoutException as exc:
                    last = Timeout(f"request timed out: {type(exc).__name__}")
                    log.warning("attempt %d/%d timed out", attempt + 1, self.attempts)
                    continue
                except httpx.TransportError as exc:
                    last = ProviderError(0, f"transport error: {type(exc).__name__}")
                    log.warning("attempt %d/%d transport error", attempt + 1, self.attempts)
                    continue
                if resp.status_code >= 500:
                    last = ProviderError(resp.status_code, resp.text)
                    log.warning("attempt %d/%d got HTTP %d", attempt + 1, self.attempts, resp.status_code)
                    continue
                if resp.status_code >= 400:
                    raise ProviderError(resp.status_code, resp.text)
                return _result(_extract_text(resp), self.kind, request, self.counter)
        raise last


def _extract_text(resp: httpx.Response) -> str:
    try:
        data = resp.json()
        return data["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError):
        raise ProviderError(resp.status_code, resp.text) from None


class RecordingBackend:
    """Wraps a live backend and stores every response in a replay cache."""

    def __init__(self, inner: Backend, cache: ReplayCache):
        self.inner = inner
        self.cache = cache
        self.kind = inner.kind

    def generate(self, request: GenerationRequest) -> GenerationResult:
        key = cache_key(request)
        if key in self.cache:
            return _result(self.cache.get(key), self.kind, request, getattr(self.inner, "counter", None))
        result = self.inner.generate(request)
        self.cache.record(request, result.text)
        return result
