"""Chat gateway: sessions, forking, digests, replay/record providers, and
the HTTP provider against a local stub server."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from mtcgen.gateway import (
    ChatSession,
    FixtureMiss,
    HttpChatProvider,
    Message,
    ProviderConfig,
    ProviderUnavailable,
    RecordProvider,
    ReplayProvider,
    conversation_digest,
    fork,
    make_provider,
    new_session,
    send,
    write_fixture_line,
)

REPLAY = lambda path: ProviderConfig(kind="replay", fixture_path=str(path))


def seed_fixture(path, config, messages, reply):
    return write_fixture_line(path, config, messages, reply)


# ── sessions ──────────────────────────────────────────────────────────────────


def test_new_session_starts_with_system_message(tmp_path):
    session = new_session(REPLAY(tmp_path / "f.jsonl"), "be helpful")
    assert [m.role for m in session.messages] == ["system"]


def test_fork_is_independent(tmp_path):
    fixture = tmp_path / "f.jsonl"
    config = REPLAY(fixture)
    base = new_session(config, "sys")
    seed_fixture(
        fixture, config, base.messages + [Message("user", "hello")], "world"
    )
    child = fork(base)
    assert child.session_id != base.session_id
    provider = ReplayProvider(fixture)
    send(child, provider, "hello")
    assert len(base.messages) == 1  # the fork never touches the original
    assert len(child.messages) == 3


def test_fork_of_system_only_session_has_one_message(tmp_path):
    base = new_session(REPLAY(tmp_path / "f.jsonl"), "sys")
    assert len(fork(base).messages) == 1


# ── digests ───────────────────────────────────────────────────────────────────


def test_digest_depends_on_model_temperature_messages():
    messages = [Message("system", "s"), Message("user", "u")]
    base = conversation_digest("m1", 0.2, messages)
    assert conversation_digest("m2", 0.2, messages) != base
    assert conversation_digest("m1", 0.3, messages) != base
    assert conversation_digest("m1", 0.2, messages + [Message("user", "x")]) != base
    assert conversation_digest("m1", 0.2, list(messages)) == base


def test_digest_ignores_unrelated_state():
    messages = [Message("system", "s"), Message("user", "u")]
    session_a = ChatSession(ProviderConfig(kind="http-chat", endpoint="http://x"), list(messages))
    session_b = ChatSession(ProviderConfig(kind="http-chat", endpoint="http://x"), list(messages))
    assert conversation_digest("m", 0.2, session_a.messages) == conversation_digest(
        "m", 0.2, session_b.messages
    )


# ── replay provider ───────────────────────────────────────────────────────────


def test_replay_returns_recorded_reply(tmp_path):
    fixture = tmp_path / "f.jsonl"
    config = REPLAY(fixture)
    session = new_session(config, "sys")
    seed_fixture(fixture, config, session.messages + [Message("user", "q")], "class T { }")
    provider = ReplayProvider(fixture)
    assert send(session, provider, "q") == "class T { }"


def test_replay_identical_sends_get_identical_replies(tmp_path):
    fixture = tmp_path / "f.jsonl"
    config = REPLAY(fixture)
    probe = new_session(config, "sys")
    seed_fixture(fixture, config, probe.messages + [Message("user", "q")], "ok")
    provider = ReplayProvider(fixture)

    session = new_session(config, "sys")
    first = send(session, provider, "q")
    # now the session has grown; reply to the longer conversation too
    seed_fixture(fixture, config, session.messages + [Message("user", "q")], "ok2")
    provider = ReplayProvider(fixture)
    session = new_session(config, "sys")
    assert send(session, provider, "q") == "ok"
    assert send(session, provider, "q") == "ok2"
    assert len(session.messages) == 5  # system + 2 x (user, assistant)


def test_replay_duplicate_digests_consumed_in_order_then_stick(tmp_path):
    fixture = tmp_path / "f.jsonl"
    config = REPLAY(fixture)
    base = new_session(config, "sys")
    request = base.messages + [Message("user", "same")]
    seed_fixture(fixture, config, request, "variant-1")
    seed_fixture(fixture, config, request, "variant-2")
    provider = ReplayProvider(fixture)
    replies = [send(fork(base), provider, "same") for _ in range(4)]
    assert replies == ["variant-1", "variant-2", "variant-2", "variant-2"]
    assert len(provider.hit_log) == 4


def test_fixture_miss(tmp_path):
    fixture = tmp_path / "f.jsonl"
    fixture.write_text("", encoding="utf-8")
    provider = ReplayProvider(fixture)
    session = new_session(REPLAY(fixture), "sys")
    with pytest.raises(FixtureMiss):
        send(session, provider, "unknown")
    assert len(session.messages) == 1  # failed send leaves the session alone


def test_forked_replay_transcripts_are_independent(tmp_path):
    fixture = tmp_path / "f.jsonl"
    config = REPLAY(fixture)
    base = new_session(config, "sys")
    request = base.messages + [Message("user", "go")]
    for i in range(5):
        seed_fixture(fixture, config, request, f"r{i}")
    provider = ReplayProvider(fixture)
    forks = [fork(base) for _ in range(5)]
    replies = [send(f, provider, "go") for f in forks]
    assert replies == ["r0", "r1", "r2", "r3", "r4"]
    assert all(len(f.messages) == 3 for f in forks)
    assert len({f.session_id for f in forks}) == 5
    assert len(provider.hit_log) == 5


# ── provider config validation ────────────────────────────────────────────────


def test_temperature_bounds():
    with pytest.raises(ValueError):
        ProviderConfig(kind="replay", fixture_path="f", temperature=2.5)


def test_replay_requires_fixture_path():
    with pytest.raises(ValueError):
        ProviderConfig(kind="replay", fixture_path=None)


def test_unknown_kind_rejected():
    with pytest.raises(ValueError):
        ProviderConfig(kind="telepathy")


# ── http provider against a stub server ───────────────────────────────────────


class _StubHandler(BaseHTTPRequestHandler):
    fail_first = 0
    seen_auth: list[str] = []
    calls = 0

    def do_POST(self):
        cls = type(self)
        cls.calls += 1
        cls.seen_auth.append(self.headers.get("Authorization", ""))
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        if cls.calls <= cls.fail_first:
            self.send_response(503)
            self.end_headers()
            return
        reply = f"echo:{body['messages'][-1]['content']}"
        payload = json.dumps({"choices": [{"message": {"content": reply}}]}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture
def stub_server():
    _StubHandler.fail_first = 0
    _StubHandler.calls = 0
    _StubHandler.seen_auth = []
    server = HTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()


def test_http_provider_round_trip(stub_server):
    config = ProviderConfig(kind="http-chat", endpoint=stub_server, model="m")
    provider = HttpChatProvider(backoff=0.01)
    session = new_session(config, "sys")
    assert send(session, provider, "ping") == "echo:ping"


def test_http_provider_retries_transient_failures(stub_server):
    _StubHandler.fail_first = 2
    config = ProviderConfig(kind="http-chat", endpoint=stub_server, model="m")
    provider = HttpChatProvider(backoff=0.01)
    session = new_session(config, "sys")
    assert send(session, provider, "ping") == "echo:ping"
    assert _StubHandler.calls == 3


def test_http_provider_gives_up_after_retries():
    config = ProviderConfig(
        kind="http-chat", endpoint="http://127.0.0.1:1", model="m"
    )
    provider = HttpChatProvider(backoff=0.01)
    session = new_session(config, "sys")
    with pytest.raises(ProviderUnavailable):
        send(session, provider, "ping")


def test_record_then_replay_round_trip(stub_server, tmp_path):
    fixture = tmp_path / "captured.jsonl"
    config = ProviderConfig(
        kind="record", endpoint=stub_server, model="m", fixture_path=str(fixture)
    )
    recorder = RecordProvider(fixture, inner=HttpChatProvider(backoff=0.01))
    live = new_session(config, "sys")
    live_replies = [send(live, recorder, "one"), send(live, recorder, "two")]

    replay_config = ProviderConfig(kind="replay", model="m", fixture_path=str(fixture))
    replayer = ReplayProvider(fixture)
    replayed = new_session(replay_config, "sys")
    replay_replies = [send(replayed, replayer, "one"), send(replayed, replayer, "two")]
    assert replay_replies == live_replies


def test_api_key_never_stored(stub_server, tmp_path, monkeypatch):
    secret = "sk-TOPSECRET-0042"
    monkeypatch.setenv("MTCGEN_API_KEY", secret)
    fixture = tmp_path / "captured.jsonl"
    config = ProviderConfig(
        kind="record", endpoint=stub_server, model="m", fixture_path=str(fixture)
    )
    recorder = RecordProvider(fixture, inner=HttpChatProvider(backoff=0.01))
    session = new_session(config, "sys")
    send(session, recorder, "hello")
    assert any(secret in auth for auth in _StubHandler.seen_auth)  # used on the wire
    assert secret not in fixture.read_text(encoding="utf-8")
    assert all(secret not in m.content for m in session.messages)


def test_make_provider_dispatch(tmp_path):
    assert isinstance(make_provider(REPLAY(tmp_path / "f.jsonl")), ReplayProvider)
    assert isinstance(
        make_provider(
            ProviderConfig(kind="record", endpoint="http://x", fixture_path=str(tmp_path / "g"))
        ),
        RecordProvider,
    )
    assert isinstance(
        make_provider(ProviderConfig(kind="http-chat", endpoint="http://x")),
        HttpChatProvider,
    )


def test_usage_counter_tracks_requests(tmp_path):
    fixture = tmp_path / "f.jsonl"
    config = REPLAY(fixture)
    session = new_session(config, "sys")
    seed_fixture(fixture, config, session.messages + [Message("user", "q")], "r")
    provider = ReplayProvider(fixture)
    send(session, provider, "q")
    assert provider.usage.requests == 1
    assert provider.usage.chars_received == 1
