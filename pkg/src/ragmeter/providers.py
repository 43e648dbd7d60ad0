"""Provider abstractions: embedding and text-completion backends.

Two provider families exist:

* ``BaseEmbedder``   -- maps texts (tagged query/passage) to fixed-size vectors.
* ``BaseCompleter``  -- maps a prompt to a text reply; used by both the answer
  generator and the LLM judge.

An OpenAI-compatible HTTP implementation is provided for real runs; the
deterministic mock providers live in :mod:`ragmeter.mocks`. Transport failures
are raised as ``ProviderTransportError`` and retried with bounded exponential
backoff; anything else is a plain ``ProviderError``.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
import urllib.error
import urllib.request
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Sequence

import numpy as np

from .errors import ProviderError, ProviderTransportError

logger = logging.getLogger(__name__)

_RETRYABLE_HTTP = {408, 409, 425, 429, 500, 502, 503, 504}


class EmbedKind(str, Enum):
    QUERY = "query"
    PASSAGE = "passage"


class BaseEmbedder(ABC):
    """Deterministic-or-cached text embedding backend."""

    provider_id: str
    model_id: str

    @abstractmethod
    def embed_texts(self, texts: Sequence[str], kind: EmbedKind) -> list[np.ndarray]:
        """Embed texts in order; one vector per input."""

    @staticmethod
    def validate_texts(texts: Sequence[str]) -> None:
        if not texts:
            raise ValueError("texts must be non-empty")


class BaseCompleter(ABC):
    """Prompt-in, text-out backend used for generation and judging."""

    provider_id: str
    model_id: str

    @abstractmethod
    def complete(
        self, prompt: str, *, temperature: float, max_tokens: int, sample_index: int = 0
    ) -> str:
        """Return the model reply for one prompt sample."""


@dataclass(frozen=True)
class RetryPolicy:
    attempts: int = 4
    base_delay: float = 0.25
    max_delay: float = 4.0


class RateLimiter:
    """Minimum-interval throttle shared across a provider's worker threads.

    ``requests_per_minute <= 0`` disables throttling.
    """

    def __init__(
        self,
        requests_per_minute: float,
        *,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.interval = 60.0 / requests_per_minute if requests_per_minute > 0 else 0.0
        self._clock = clock
        self._sleep = sleep
        self._next_slot = 0.0
        self._lock = threading.Lock()

    def wait(self) -> None:
        if self.interval <= 0.0:
            return
        with self._lock:
            now = self._clock()
            slot = max(now, self._next_slot)
            self._next_slot = slot + self.interval
        delay = slot - now
        if delay > 0:
            self._sleep(delay)


def with_retries(
    fn: Callable[[], Any],
    policy: RetryPolicy = RetryPolicy(),
    *,
    sleep: Callable[[float], None] = time.sleep,
) -> Any:
    """Run fn, retrying ProviderTransportError with exponential backoff."""
    for attempt in range(policy.attempts):
        try:
            return fn()
        except ProviderTransportError as exc:
            if attempt == policy.attempts - 1:
                raise
            delay = min(policy.max_delay, policy.base_delay * (2**attempt))
            logger.warning(
                "transient provider failure (attempt %d/%d), retrying in %.2fs: %s",
                attempt + 1,
                policy.attempts,
                delay,
                exc,
            )
            sleep(delay)
    raise AssertionError("unreachable")


def _http_post_json(url: str, payload: dict, headers: dict[str, str], timeout: float) -> dict:
    request = urllib.request.Request(
        url,
        data=json.dumps(payload).encode("utf-8"),
        headers={"Content-Type": "application/json", **headers},
        method="POST",
    )
    try:
        with urllib.request.urlopen(request, timeout=timeout) as response:
            return json.loads(response.read().decode("utf-8"))
    except urllib.error.HTTPError as exc:
        body = exc.read().decode("utf-8", errors="replace")[:500]
        if exc.code in _RETRYABLE_HTTP:
            raise ProviderTransportError(f"HTTP {exc.code} from {url}: {body}") from exc
        raise ProviderError(f"HTTP {exc.code} from {url}: {body}") from exc
    except (urllib.error.URLError, TimeoutError, OSError) as exc:
        raise ProviderTransportError(f"transport failure for {url}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ProviderError(f"non-JSON reply from {url}") from exc


def _resolve_api_key(api_key_env: str) -> str:
    key = os.environ.get(api_key_env, "")
    if not key:
        raise ProviderError(f"API key environment variable {api_key_env!r} is not set")
    return key


Transport = Callable[[str, dict, dict, float], dict]


class OpenAIChatCompleter(BaseCompleter):
    """Minimal OpenAI-compatible chat-completions client."""

    provider_id = "openai"

    def __init__(
        self,
        model_id: str,
        *,
        base_url: str = "https://api.openai.com/v1",
        api_key_env: str = "OPENAI_API_KEY",
        timeout: float = 60.0,
        retry: RetryPolicy = RetryPolicy(),
        requests_per_minute: float = 0.0,
        transport: Transport | None = None,
    ):
        self.model_id = model_id
        self.base_url = base_url.rstrip("/")
        self.api_key_env = api_key_env
        self.timeout = timeout
        self.retry = retry
        self.limiter = RateLimiter(requests_per_minute)
        self._transport = transport or _http_post_json

    def complete(
        self, prompt: str, *, temperature: float, max_tokens: int, sample_index: int = 0
    ) -> str:
        headers = {"Authorization": f"Bearer {_resolve_api_key(self.api_key_env)}"}
        payload = {
            "model": self.model_id,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": temperature,
            "max_tokens": max_tokens,
        }
        url = f"{self.base_url}/chat/completions"
        self.limiter.wait()
        body = with_retries(lambda: self._transport(url, payload, headers, self.timeout), self.retry)
        try:
            return str(body["choices"][0]["message"]["content"])
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"unexpected completion payload shape from {url}") from exc


class OpenAIEmbedder(BaseEmbedder):
    """Minimal OpenAI-compatible embeddings client with optional role prefixes.

    Models such as e5 expect distinct "query:"/"passage:" prefixes; they are
    configured per provider profile and applied here, keeping the retrieval
    core agnostic of the convention.
    """

    provider_id = "openai"

    def __init__(
        self,
        model_id: str,
        *,
        base_url: str = "https://api.openai.com/v1",
        api_key_env: str = "OPENAI_API_KEY",
        query_prefix: str = "",
        passage_prefix: str = "",
        timeout: float = 60.0,
        retry: RetryPolicy = RetryPolicy(),
        requests_per_minute: float = 0.0,
        transport: Transport | None = None,
    ):
        self.model_id = model_id
        self.base_url = base_url.rstrip("/")
        self.api_key_env = api_key_env
        self.query_prefix = query_prefix
        self.passage_prefix = passage_prefix
        self.timeout = timeout
        self.retry = retry
        self.limiter = RateLimiter(requests_per_minute)
        self._transport = transport or _http_post_json

    def _prefix(self, kind: EmbedKind) -> str:
        return self.query_prefix if kind is EmbedKind.QUERY else self.passage_prefix

    def embed_texts(self, texts: Sequence[str], kind: EmbedKind) -> list[np.ndarray]:
        self.validate_texts(texts)
        headers = {"Authorization": f"Bearer {_resolve_api_key(self.api_key_env)}"}
        prefix = self._prefix(kind)
        payload = {"model": self.model_id, "input": [prefix + text for text in texts]}
        url = f"{self.base_url}/embeddings"
        self.limiter.wait()
        body = with_retries(lambda: self._transport(url, payload, headers, self.timeout), self.retry)
        try:
            rows = sorted(body["data"], key=lambda item: item["index"])
            vectors = [np.asarray(row["embedding"], dtype=np.float64) for row in rows]
        except (KeyError, TypeError) as exc:
            raise ProviderError(f"unexpected embedding payload shape from {url}") from exc
        if len(vectors) != len(texts):
            raise ProviderError(f"provider returned {len(vectors)} vectors for {len(texts)} texts")
        return vectors
