"""Decision backends: live chat-completions, scripted functions, recorded transcripts.

Every backend is bound to one transcript stream (normally one agent in one
match) and appends a record per successful call, so usage can be audited
and a run replayed without touching the network.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping

import httpx

from ..core import DEFAULT_TEMPERATURE, DEFAULT_TOP_P, BackendError, Usage
from ..reasoning.context import PromptContext, estimate_tokens

log = logging.getLogger(__name__)

MODES = ("live", "scripted", "replay")


class ConfigError(ValueError):
    pass


class ReplayExhausted(BackendError):
    pass


@dataclass
class Completion:
    text: str
    usage: Usage


@dataclass
class BackendSpec:
    mode: str = "scripted"
    endpoint: str | None = None
    model: str | None = None
    api_key_env: str | None = None
    script: str = "default"
    transcript: str | None = None
    temperature: float = DEFAULT_TEMPERATURE
    top_p: float = DEFAULT_TOP_P
    max_attempts: int = 3
    backoff: float = 1.0
    timeout: float = 60.0
    requests_per_minute: float | None = None

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"unknown backend mode {self.mode!r}")

    def validate(self) -> None:
        if self.mode == "live":
            if not self.endpoint or not self.model:
                raise ConfigError("live mode needs endpoint and model")
            if self.api_key_env and not os.environ.get(self.api_key_env):
                raise ConfigError(f"environment variable {self.api_key_env} is not set")
        elif self.mode == "replay":
            if not self.transcript or not Path(self.transcript).is_file():
                raise ConfigError(f"replay transcript {self.transcript!r} does not exist")

    @classmethod
    def from_dict(cls, d: Mapping[str, Any] | None) -> "BackendSpec":
        return cls(**dict(d or {}))


def request_hash(messages: list[dict]) -> str:
    return hashlib.sha256(json.dumps(messages, sort_keys=True).encode()).hexdigest()[:16]


class Transcript:
    """Ordered call records, grouped by stream key; thread-safe appends."""

    def __init__(self, records: Iterable[dict] = ()) -> None:
        self.records: list[dict] = list(records)
        self.failures: list[dict] = []
        self._lock = threading.Lock()

    def append(self, record: dict) -> None:
        with self._lock:
            self.records.append(record)

    def fail(self, record: dict) -> None:
        with self._lock:
            self.failures.append(record)

    def stream(self, key: str) -> list[dict]:
        return [r for r in self.records if r["stream"] == key]

    def usage(self, key: str | None = None) -> Usage:
        total = Usage()
        for r in self.records:
            if key is None or r["stream"] == key:
                total.add(Usage.from_dict(r["usage"]))
        return total

    def write_jsonl(self, path: str | Path) -> Path:
        path = Path(path)
        with path.open("w", encoding="utf-8") as fh:
            for r in self.records:
                fh.write(json.dumps(r, sort_keys=True, ensure_ascii=False) + "\n")
        return path

    @classmethod
    def read_jsonl(cls, path: str | Path) -> "Transcript":
        with Path(path).open(encoding="utf-8") as fh:
            return cls(json.loads(line) for line in fh if line.strip())


class Backend:
    """Base class: subclasses implement :meth:`_generate`."""

    mode = "abstract"

    def __init__(self, stream: str = "default", transcript: Transcript | None = None) -> None:
        self.stream = stream
        self.transcript = transcript if transcript is not None else Transcript()
        self._seq = 0

    @property
    def calls(self) -> int:
        return self._seq

    def complete(self, ctx: PromptContext) -> Completion:
        messages = ctx.messages()
        if not any(m["content"].strip() for m in messages):
            raise ValueError("empty prompt")
        text, usage = self._generate(messages, ctx)
        usage.calls = 1
        self.transcript.append({
            "stream": self.stream,
            "seq": self._seq,
            "template": ctx.template,
            "perspective": ctx.agent,
            "request_hash": request_hash(messages),
            "messages": messages,
            "response": text,
            "usage": usage.to_dict(),
        })
        self._seq += 1
        return Completion(text, usage)

    def _generate(self, messages: list[dict], ctx: PromptContext) -> tuple[str, Usage]:
        raise NotImplementedError


def _estimated_usage(messages: list[dict], text: str) -> Usage:
    return Usage(sum(estimate_tokens(m["content"]) for m in messages), estimate_tokens(text))


class ScriptedBackend(Backend):
    """Deterministic: the response is a pure function of the prompt context."""

    mode = "scripted"

    def __init__(self, script: Callable[[PromptContext], str] | str = "default", stream: str = "default",
                 transcript: Transcript | None = None) -> None:
        super().__init__(stream, transcript)
        if isinstance(script, str):
            from .scripts import get_script
            script = get_script(script)
        self.script = script

    def _generate(self, messages: list[dict], ctx: PromptContext) -> tuple[str, Usage]:
        text = self.script(ctx)
        return text, _estimated_usage(messages, text)


class ReplayBackend(Backend):
    """Serves recorded responses in order for its stream; never touches the network."""

    mode = "replay"

    def __init__(self, source: Transcript, stream: str = "default", transcript: Transcript | None = None,
                 strict: bool = False) -> None:
        super().__init__(stream, transcript)
        self._records = source.stream(stream)
        self.strict = strict

    def _generate(self, messages: list[dict], ctx: PromptContext) -> tuple[str, Usage]:
        if self._seq >= len(self._records):
            raise ReplayExhausted(f"transcript stream {self.stream!r} has only {len(self._records)} records")
        rec = self._records[self._seq]
        if rec["request_hash"] != request_hash(messages):
            msg = f"stream {self.stream!r} call {self._seq}: request differs from the recorded one"
            if self.strict:
                raise BackendError(msg)
            log.warning(msg)
        return rec["response"], Usage.from_dict(rec["usage"])


class RateLimiter:
    """Minimum spacing between requests, shared by every live backend in the process."""

    def __init__(self, requests_per_minute: float | None = None) -> None:
        self.interval = 60.0 / requests_per_minute if requests_per_minute else 0.0
        self._next = 0.0
        self._lock = threading.Lock()

    def configure(self, requests_per_minute: float | None) -> None:
        with self._lock:
            self.interval = 60.0 / requests_per_minute if requests_per_minute else 0.0

    def wait(self, sleep: Callable[[float], None] = time.sleep) -> None:
        with self._lock:
            now = time.monotonic()
            start = max(now, self._next)
            self._next = start + self.interval
        if start > now:
            sleep(start - now)


GLOBAL_LIMITER = RateLimiter()


class LiveBackend(Backend):
    """OpenAI-compatible ``/chat/completions`` over HTTP."""

    mode = "live"

    def __init__(self, spec: BackendSpec, stream: str = "default", transcript: Transcript | None = None,
                 client: httpx.Client | None = None, sleep: Callable[[float], None] = time.sleep,
                 limiter: RateLimiter = GLOBAL_LIMITER) -> None:
        super().__init__(stream, transcript)
        spec.validate()
        self.spec = spec
        self._client = client or httpx.Client(timeout=spec.timeout)
        self._sleep = sleep
        self._limiter = limiter
        if spec.requests_per_minute:
            limiter.configure(spec.requests_per_minute)

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.spec.api_key_env:
            headers["Authorization"] = f"Bearer {os.environ[self.spec.api_key_env]}"
        return headers

    def payload(self, messages: list[dict], ctx: PromptContext) -> dict:
        temperature = ctx.temperature if ctx.temperature is not None else self.spec.temperature
        top_p = ctx.top_p if ctx.top_p is not None else self.spec.top_p
        return {"model": self.spec.model, "messages": messages, "temperature": temperature, "top_p": top_p}

    def _generate(self, messages: list[dict], ctx: PromptContext) -> tuple[str, Usage]:
        url = self.spec.endpoint.rstrip("/") + "/chat/completions"  # type: ignore[union-attr]
        body = self.payload(messages, ctx)
        last_error: Exception | None = None
        for attempt in range(1, self.spec.max_attempts + 1):
            self._limiter.wait(self._sleep)
            try:
                resp = self._client.post(url, json=body, headers=self._headers())
                resp.raise_for_status()
                data = resp.json()
                text = data["choices"][0]["message"]["content"] or ""
            except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
                last_error = exc
                self.transcript.fail({"stream": self.stream, "seq": self._seq, "attempt": attempt,
                                      "error": f"{type(exc).__name__}: {exc}"})
                log.warning("attempt %d/%d failed: %s", attempt, self.spec.max_attempts, exc)
                if attempt < self.spec.max_attempts:
                    self._sleep(self.spec.backoff * 2 ** (attempt - 1))
                continue
            u = data.get("usage") or {}
            if "prompt_tokens" in u:
                usage = Usage(int(u["prompt_tokens"]), int(u.get("completion_tokens", 0)))
            else:
                usage = _estimated_usage(messages, text)
            return text, usage
        raise BackendError(f"chat completion failed after {self.spec.max_attempts} attempts: {last_error}")


def make_backend(spec: BackendSpec, stream: str, transcript: Transcript,
                 replay_source: Transcript | None = None) -> Backend:
    if spec.mode == "scripted":
        return ScriptedBackend(spec.script, stream, transcript)
    if spec.mode == "replay":
        if replay_source is None:
            spec.validate()
            replay_source = Transcript.read_jsonl(spec.transcript)  # type: ignore[arg-type]
        return ReplayBackend(replay_source, stream, transcript)
    return LiveBackend(spec, stream, transcript)
