import pytest

from ragmeter.errors import ProviderError, ProviderTransportError
from ragmeter.providers import (
    OpenAIChatCompleter,
    OpenAIEmbedder,
    RateLimiter,
    RetryPolicy,
    with_retries,
)


def test_with_retries_recovers_after_transient_failures():
    attempts = []
    sleeps = []

    def flaky():
        attempts.append(1)
        if len(attempts) < 3:
            raise ProviderTransportError("boom")
        return "ok"

    result = with_retries(flaky, RetryPolicy(attempts=4, base_delay=0.25), sleep=sleeps.append)
    assert result == "ok"
    assert len(attempts) == 3
    assert sleeps == [0.25, 0.5]


def test_with_retries_exhausts_and_raises():
    sleeps = []

    def always_fails():
        raise ProviderTransportError("down")

    with pytest.raises(ProviderTransportError):
        with_retries(always_fails, RetryPolicy(attempts=3, base_delay=0.1), sleep=sleeps.append)
    assert sleeps == [0.1, 0.2]


def test_with_retries_caps_delay():
    sleeps = []

    def always_fails():
        raise ProviderTransportError("down")

    with pytest.raises(ProviderTransportError):
        with_retries(
            always_fails, RetryPolicy(attempts=5, base_delay=1.0, max_delay=2.0), sleep=sleeps.append
        )
    assert sleeps == [1.0, 2.0, 2.0, 2.0]


def test_with_retries_does_not_retry_plain_provider_errors():
    attempts = []

    def fails_hard():
        attempts.append(1)
        raise ProviderError("bad request")

    with pytest.raises(ProviderError):
        with_retries(fails_hard, RetryPolicy(attempts=4))
    assert len(attempts) == 1


def test_rate_limiter_spaces_out_calls():
    clock = {"now": 100.0}
    sleeps = []

    def fake_sleep(delay):
        sleeps.append(round(delay, 6))
        clock["now"] += delay

    limiter = RateLimiter(30, clock=lambda: clock["now"], sleep=fake_sleep)  # 2s interval
    limiter.wait()  # first call goes straight through
    limiter.wait()
    limiter.wait()
    assert sleeps == [2.0, 2.0]


def test_rate_limiter_disabled_by_default():
    limiter = RateLimiter(0, clock=lambda: 0.0, sleep=lambda d: pytest.fail("should not sleep"))
    for _ in range(5):
        limiter.wait()


def test_chat_completer_builds_payload_and_parses_reply(monkeypatch):
    monkeypatch.setenv("TEST_KEY", "secret")
    captured = {}

    def fake_transport(url, payload, headers, timeout):
        captured.update(url=url, payload=payload, headers=headers)
        return {"choices": [{"message": {"content": "Yes"}}]}

    completer = OpenAIChatCompleter(
        "judge-model", base_url="https://llm.example/v1", api_key_env="TEST_KEY", transport=fake_transport
    )
    reply = completer.complete("the prompt", temperature=0.0, max_tokens=8)
    assert reply == "Yes"
    assert captured["url"] == "https://llm.example/v1/chat/completions"
    assert captured["payload"]["model"] == "judge-model"
    assert captured["payload"]["messages"] == [{"role": "user", "content": "the prompt"}]
    assert captured["payload"]["temperature"] == 0.0
    assert captured["headers"]["Authorization"] == "Bearer secret"


def test_chat_completer_requires_api_key(monkeypatch):
    monkeypatch.delenv("MISSING_KEY", raising=False)
    completer = OpenAIChatCompleter("m", api_key_env="MISSING_KEY", transport=lambda *a: {})
    with pytest.raises(ProviderError, match="MISSING_KEY"):
        completer.complete("p", temperature=0.0, max_tokens=8)


def test_chat_completer_rejects_malformed_payload(monkeypatch):
    monkeypatch.setenv("TEST_KEY", "secret")
    completer = OpenAIChatCompleter(
        "m", api_key_env="TEST_KEY", transport=lambda *a: {"unexpected": True}
    )
    with pytest.raises(ProviderError, match="payload shape"):
        completer.complete("p", temperature=0.0, max_tokens=8)


def test_embedder_orders_rows_by_index_and_applies_prefixes(monkeypatch):
    monkeypatch.setenv("TEST_KEY", "secret")
    captured = {}

    def fake_transport(url, payload, headers, timeout):
        captured.update(url=url, payload=payload)
        return {
            "data": [
                {"index": 1, "embedding": [0.0, 1.0]},
                {"index": 0, "embedding": [1.0, 0.0]},
            ]
        }

    embedder = OpenAIEmbedder(
        "embed-model",
        base_url="https://llm.example/v1",
        api_key_env="TEST_KEY",
        query_prefix="query: ",
        transport=fake_transport,
    )
    from ragmeter.providers import EmbedKind

    vectors = embedder.embed_texts(["a", "b"], EmbedKind.QUERY)
    assert captured["payload"]["input"] == ["query: a", "query: b"]
    assert list(vectors[0]) == [1.0, 0.0]
    assert list(vectors[1]) == [0.0, 1.0]


def test_embedder_rejects_count_mismatch(monkeypatch):
    monkeypatch.setenv("TEST_KEY", "secret")
    embedder = OpenAIEmbedder(
        "m",
        api_key_env="TEST_KEY",
        transport=lambda *a: {"data": [{"index": 0, "embedding": [1.0]}]},
    )
    from ragmeter.providers import EmbedKind

    with pytest.raises(ProviderError, match="1 vectors for 2 texts"):
        embedder.embed_texts(["a", "b"], EmbedKind.QUERY)
