"""Completion backends: a chat-completions HTTP client and a scripted mock."""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence, TypeVar

import requests

from ..errors import (
    ConfigError,
    DataIOError,
    RateLimited,
    ScriptExhausted,
    TransportError,
    Truncated,
    Unparseable,
)
from .prompts import Prompt

log = logging.getLogger(__name__)

API_KEY_ENV = "STRUCTSYNTH_API_KEY"
T = TypeVar("T")


@dataclass(frozen=True)
class LlmParams:
    model: str = "gpt-4o-mini"
    temperature: float = 0.9
    top_p: float = 0.95
    max_tokens: int = 8000
    frequency_penalty: float = 0.0
    presence_penalty: float = 0.0

    def __post_init__(self):
        if self.temperature < 0:
            raise ConfigError("temperature must be >= 0")
        if not 0 < self.top_p <= 1:
            raise ConfigError("top_p must lie in (0, 1]")
        if self.max_tokens < 1:
            raise ConfigError("max_tokens must be positive")


@dataclass
class Exchange:
    """One prompt/response round trip, as written to transcripts."""

    kind: str
    subject: str | None
    prompt: str
    response: str
    parsed: object = None
    note: str | None = None

    def to_json(self) -> dict:
        return {k: v for k, v in asdict(self).items()}


class Backend:
    """Anything with ``complete(prompt) -> str``."""

    def complete(self, prompt: Prompt) -> str:
        raise NotImplementedError


class MockBackend(Backend):
    """Replays canned responses keyed by ``"kind:subject"``.

    A key without a matching entry falls back to the bare ``"kind"`` key, so
    one list can serve every subject of a kind. Responses are consumed in
    order; running out raises :class:`ScriptExhausted`.
    """

    def __init__(self, script: Mapping[str, Sequence[str]]):
        self.script = {k: list(v) for k, v in script.items()}
        self.consumed: dict[str, int] = {k: 0 for k in self.script}
        self.calls: list[Prompt] = []
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: str | Path) -> "MockBackend":
        try:
            with open(path, encoding="utf-8") as fh:
                script = json.load(fh)
        except OSError as exc:
            raise DataIOError(f"cannot read mock script {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"mock script {path} is not valid JSON: {exc}") from exc
        if not isinstance(script, dict) or not all(isinstance(v, list) for v in script.values()):
            raise ConfigError(f"mock script {path} must map keys to lists of strings")
        return cls(script)

    def _resolve_key(self, prompt: Prompt) -> str:
        if prompt.key in self.script:
            return prompt.key
        if prompt.kind.value in self.script:
            return prompt.kind.value
        raise ScriptExhausted(f"no scripted responses for {prompt.key!r}")

    def complete(self, prompt: Prompt) -> str:
        with self._lock:
            key = self._resolve_key(prompt)
            i = self.consumed[key]
            if i >= len(self.script[key]):
                raise ScriptExhausted(f"scripted responses for {key!r} exhausted after {i} calls")
            self.consumed[key] = i + 1
            self.calls.append(prompt)
            return self.script[key][i]


class HttpBackend(Backend):
    """POSTs a single user message to a chat-completions endpoint."""

    def __init__(self, endpoint: str, params: LlmParams = LlmParams(), api_key: str | None = None,
                 max_in_flight: int = 4, attempts: int = 3, backoff: float = 1.0, timeout: float = 120.0,
                 session: requests.Session | None = None):
        self.endpoint = endpoint
        self.params = params
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        self.attempts = attempts
        self.backoff = backoff
        self.timeout = timeout
        self.session = session or requests.Session()
        self._slots = threading.BoundedSemaphore(max_in_flight)

    def payload(self, prompt: Prompt) -> dict:
        p = self.params
        return {
            "model": p.model,
            "messages": [{"role": "user", "content": prompt.text}],
            "temperature": p.temperature,
            "top_p": p.top_p,
            "max_tokens": p.max_tokens,
            "frequency_penalty": p.frequency_penalty,
            "presence_penalty": p.presence_penalty,
        }

    def _post_once(self, body: dict) -> requests.Response:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return self.session.post(self.endpoint, json=body, headers=headers, timeout=self.timeout)

    def complete(self, prompt: Prompt) -> str:
        body = self.payload(prompt)
        last: Exception | None = None
        with self._slots:
            for attempt in range(self.attempts):
                if attempt:
                    time.sleep(self.backoff * 2 ** (attempt - 1))
                try:
                    resp = self._post_once(body)
                except requests.RequestException as exc:
                    last = TransportError(f"request to {self.endpoint} failed: {exc}")
                    continue
                if resp.status_code == 429:
                    last = RateLimited(f"rate limited by {self.endpoint}")
                    continue
                if resp.status_code >= 500:
                    last = TransportError(f"{self.endpoint} returned HTTP {resp.status_code}")
                    continue
                if resp.status_code >= 400:
                    raise TransportError(f"{self.endpoint} returned HTTP {resp.status_code}: {resp.text[:200]}")
                return self._content(resp)
        assert last is not None
        raise last

    @staticmethod
    def _content(resp: requests.Response) -> str:
        try:
            choice = resp.json()["choices"][0]
            content = choice["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"unexpected completion payload: {exc}") from exc
        if choice.get("finish_reason") == "length":
            raise Truncated("completion hit the max_tokens cap")
        return content or ""


def complete(backend: Backend, prompt: Prompt) -> str:
    return backend.complete(prompt)


def ask(backend: Backend, prompt: Prompt, parse: Callable[[str], T],
        transcript: list[Exchange] | None = None, retries: int = 1) -> T:
    """Complete and parse; on :class:`Unparseable`, re-ask with a format reminder.

    Each exchange (including failed parses) is appended to ``transcript``.
    """
    current = prompt
    for attempt in range(retries + 1):
        text = backend.complete(current)
        try:
            parsed = parse(text)
        except Unparseable as exc:
            if transcript is not None:
                transcript.append(Exchange(current.kind.value, current.subject, current.text, text,
                                           None, f"unparseable: {exc}"))
            if attempt == retries:
                raise
            log.info("unparseable %s response, re-asking: %s", current.key, exc)
            current = prompt.repaired()
            continue
        if transcript is not None:
            transcript.append(Exchange(current.kind.value, current.subject, current.text, text,
                                       _jsonable(parsed)))
        return parsed
    raise AssertionError("unreachable")


def _jsonable(value):
    if hasattr(value, "__dataclass_fields__"):
        return _jsonable(asdict(value))
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, "value") and not isinstance(value, (int, float, str)):
        return value.value
    return value


def write_transcript(exchanges: Sequence[Exchange], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ex in exchanges:
            fh.write(json.dumps(ex.to_json(), ensure_ascii=False, sort_keys=True) + "\n")
