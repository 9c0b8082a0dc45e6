"""Provider-agnostic chat interface with record/replay support.

Sessions are append-only message lists starting with a system message;
amplification relies on appending to the same conversation, and repeated
generation forks a shared prefix. Three provider kinds:

  http-chat  POSTs the de-facto {model, messages, temperature} chat payload
             and retries transient failures with exponential backoff.
  replay     resolves a digest of (model, temperature, messages) against a
             JSON-lines fixture; repeated identical requests consume the
             recorded replies for that digest in file order and stick on
             the last one, so single-reply fixtures behave as a pure lookup
             while multi-reply fixtures model repeated sampling.
  record     wraps http-chat and appends {digest, model, reply} lines.

The API key is read from the environment only at request time and is never
stored on sessions, fixtures, or logs.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path


class ProviderUnavailable(Exception):
    pass


class FixtureMiss(Exception):
    def __init__(self, digest: str):
        super().__init__(f"no fixture entry for digest {digest}")
        self.digest = digest


@dataclass(frozen=True)
class Message:
    role: str  # system | user | assistant
    content: str


@dataclass(frozen=True)
class ProviderConfig:
    kind: str = "replay"  # http-chat | replay | record
    endpoint: str = ""
    model: str = "mini-chat"
    temperature: float = 0.2
    max_tokens: int | None = None
    api_key_env: str = "MTCGEN_API_KEY"
    fixture_path: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("http-chat", "replay", "record"):
            raise ValueError(f"unknown provider kind {self.kind!r}")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be within [0, 2]")
        if self.kind in ("replay", "record") and not self.fixture_path:
            raise ValueError(f"{self.kind} provider requires fixture_path")
        if self.kind in ("http-chat", "record") and not self.endpoint:
            raise ValueError(f"{self.kind} provider requires an endpoint")


_session_counter = itertools.count(1)


@dataclass
class ChatSession:
    config: ProviderConfig
    messages: list[Message] = field(default_factory=list)
    session_id: str = field(default_factory=lambda: f"session-{next(_session_counter)}")


def new_session(config: ProviderConfig, system_message: str) -> ChatSession:
    return ChatSession(config, [Message("system", system_message)])


def fork(session: ChatSession) -> ChatSession:
    """Deep copy with a fresh id; the fork and the original never alias."""
    return ChatSession(session.config, list(session.messages))


def conversation_digest(model: str, temperature: float, messages: list[Message]) -> str:
    payload = {
        "model": model,
        "temperature": temperature,
        "messages": [{"role": m.role, "content": m.content} for m in messages],
    }
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass
class Usage:
    requests: int = 0
    chars_sent: int = 0
    chars_received: int = 0


class Provider:
    def __init__(self) -> None:
        self.usage = Usage()

    def complete(self, config: ProviderConfig, messages: list[Message]) -> str:
        raise NotImplementedError

    def _count(self, messages: list[Message], reply: str) -> None:
        self.usage.requests += 1
        self.usage.chars_sent += sum(len(m.content) for m in messages)
        self.usage.chars_received += len(reply)


class HttpChatProvider(Provider):
    RETRIES = 3

    def __init__(self, backoff: float = 0.5):
        super().__init__()
        self.backoff = backoff

    def complete(self, config: ProviderConfig, messages: list[Message]) -> str:
        import requests

        payload: dict = {
            "model": config.model,
            "temperature": config.temperature,
            "messages": [{"role": m.role, "content": m.content} for m in messages],
        }
        if config.max_tokens is not None:
            payload["max_tokens"] = config.max_tokens
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(config.api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        last_error = "no attempts made"
        for attempt in range(self.RETRIES):
            try:
                response = requests.post(
                    config.endpoint, json=payload, headers=headers, timeout=60
                )
                if response.status_code >= 500:
                    last_error = f"server error {response.status_code}"
                elif response.status_code != 200:
                    raise ProviderUnavailable(
                        f"provider rejected request: {response.status_code}"
                    )
                else:
                    data = response.json()
                    reply = data["choices"][0]["message"]["content"]
                    self._count(messages, reply)
                    return reply
            except ProviderUnavailable:
                raise
            except Exception as e:  # connection errors, malformed replies
                last_error = str(e)
            if attempt < self.RETRIES - 1:
                time.sleep(self.backoff * (2**attempt))
        raise ProviderUnavailable(f"provider unreachable after retries: {last_error}")


class ReplayProvider(Provider):
    def __init__(self, fixture_path: str | Path):
        super().__init__()
        self._lock = threading.Lock()
        self._entries: dict[str, list[str]] = {}
        self._cursor: dict[str, int] = {}
        self.hit_log: list[str] = []
        path = Path(fixture_path)
        if path.exists():
            for line in path.read_text(encoding="utf-8").splitlines():
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                self._entries.setdefault(record["digest"], []).append(record["reply"])

    def complete(self, config: ProviderConfig, messages: list[Message]) -> str:
        digest = conversation_digest(config.model, config.temperature, messages)
        with self._lock:
            replies = self._entries.get(digest)
            if not replies:
                raise FixtureMiss(digest)
            index = self._cursor.get(digest, 0)
            reply = replies[min(index, len(replies) - 1)]
            self._cursor[digest] = index + 1
            self.hit_log.append(digest)
        self._count(messages, reply)
        return reply


class RecordProvider(Provider):
    def __init__(self, fixture_path: str | Path, inner: Provider | None = None):
        super().__init__()
        self.inner = inner or HttpChatProvider()
        self.fixture_path = Path(fixture_path)
        self._lock = threading.Lock()

    def complete(self, config: ProviderConfig, messages: list[Message]) -> str:
        reply = self.inner.complete(config, messages)
        digest = conversation_digest(config.model, config.temperature, messages)
        line = json.dumps(
            {"digest": digest, "model": config.model, "reply": reply},
            sort_keys=True,
        )
        with self._lock:
            with open(self.fixture_path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
        self._count(messages, reply)
        return reply


def make_provider(config: ProviderConfig) -> Provider:
    if config.kind == "replay":
        assert config.fixture_path is not None
        return ReplayProvider(config.fixture_path)
    if config.kind == "record":
        assert config.fixture_path is not None
        return RecordProvider(config.fixture_path)
    return HttpChatProvider()


def send(session: ChatSession, provider: Provider, user_message: str) -> str:
    """Send one user message; on success the session gains both messages.

    On provider failure the session is left untouched and the pipeline
    treats the attempt as "no candidate produced".
    """
    attempted = session.messages + [Message("user", user_message)]
    reply = provider.complete(session.config, attempted)
    session.messages.append(Message("user", user_message))
    session.messages.append(Message("assistant", reply))
    return reply


def write_fixture_line(
    fixture_path: str | Path,
    config: ProviderConfig,
    messages: list[Message],
    reply: str,
) -> str:
    """Append one replay fixture entry for a prepared conversation; used by
    fixture-building tooling. Returns the digest."""
    digest = conversation_digest(config.model, config.temperature, messages)
    line = json.dumps({"digest": digest, "model": config.model, "reply": reply}, sort_keys=True)
    with open(fixture_path, "a", encoding="utf-8") as fh:
        fh.write(line + "\n")
    return digest
