"""Content-addressed disk caches for provider calls.

Completion calls are keyed by (model id, prompt, temperature, sample index);
embeddings by (provider id, model id, kind, text content hash). Keys are
SHA-256 over length-prefixed fields, so they are stable across runs and
platforms and collision-resistant. Cache writes are atomic and idempotent:
re-putting a key writes the same bytes.
"""

from __future__ import annotations

import hashlib
import json
import threading
from pathlib import Path
from typing import Sequence

import numpy as np

from .ioutils import atomic_write_text
from .providers import BaseCompleter, BaseEmbedder, EmbedKind


def _digest(parts: Sequence[str]) -> str:
    h = hashlib.sha256()
    for part in parts:
        raw = part.encode("utf-8")
        h.update(len(raw).to_bytes(8, "big"))
        h.update(raw)
    return h.hexdigest()


def cache_key(model_id: str, prompt: str, temperature: float, sample_index: int) -> str:
    return _digest([model_id, prompt, repr(float(temperature)), str(int(sample_index))])


def embedding_cache_key(provider_id: str, model_id: str, kind: EmbedKind, text: str) -> str:
    content_hash = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return _digest([provider_id, model_id, kind.value, content_hash])


class _FileStore:
    """Sharded one-file-per-key JSON store."""

    def __init__(self, root: Path | str):
        self.root = Path(root)

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.json"

    def get(self, key: str):
        path = self._path(key)
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            return None

    def put(self, key: str, value) -> None:
        atomic_write_text(self._path(key), json.dumps(value, ensure_ascii=False))


class CompletionCache:
    def __init__(self, root: Path | str):
        self._store = _FileStore(Path(root) / "completions")

    def get(self, key: str) -> str | None:
        value = self._store.get(key)
        return None if value is None else str(value["text"])

    def put(self, key: str, text: str) -> None:
        self._store.put(key, {"text": text})


class EmbeddingCache:
    def __init__(self, root: Path | str):
        self._store = _FileStore(Path(root) / "embeddings")

    def get(self, key: str) -> np.ndarray | None:
        value = self._store.get(key)
        return None if value is None else np.asarray(value, dtype=np.float64)

    def put(self, key: str, vector: np.ndarray) -> None:
        self._store.put(key, [float(v) for v in vector])


class CachedCompleter(BaseCompleter):
    """Read-through completion cache; counts provider misses and cache hits."""

    def __init__(self, inner: BaseCompleter, cache: CompletionCache):
        self.inner = inner
        self.cache = cache
        self.provider_id = inner.provider_id
        self.model_id = inner.model_id
        self.provider_calls = 0
        self.cache_hits = 0
        self._lock = threading.Lock()

    def complete(
        self, prompt: str, *, temperature: float, max_tokens: int, sample_index: int = 0
    ) -> str:
        key = cache_key(self.model_id, prompt, temperature, sample_index)
        cached = self.cache.get(key)
        if cached is not None:
            with self._lock:
                self.cache_hits += 1
            return cached
        text = self.inner.complete(
            prompt, temperature=temperature, max_tokens=max_tokens, sample_index=sample_index
        )
        with self._lock:
            self.provider_calls += 1
        self.cache.put(key, text)
        return text


class CachedEmbedder(BaseEmbedder):
    """Read-through embedding cache; only cache misses reach the provider."""

    def __init__(self, inner: BaseEmbedder, cache: EmbeddingCache):
        self.inner = inner
        self.cache = cache
        self.provider_id = inner.provider_id
        self.model_id = inner.model_id
        self.provider_calls = 0  # texts actually embedded by the provider
        self.cache_hits = 0
        self._lock = threading.Lock()

    def embed_texts(self, texts: Sequence[str], kind: EmbedKind) -> list[np.ndarray]:
        self.validate_texts(texts)
        keys = [embedding_cache_key(self.provider_id, self.model_id, kind, text) for text in texts]
        vectors: list[np.ndarray | None] = [self.cache.get(key) for key in keys]
        miss_positions = [i for i, vector in enumerate(vectors) if vector is None]
        if miss_positions:
            fresh = self.inner.embed_texts([texts[i] for i in miss_positions], kind)
            with self._lock:
                self.provider_calls += len(miss_positions)
            for position, vector in zip(miss_positions, fresh):
                self.cache.put(keys[position], vector)
                vectors[position] = vector
        with self._lock:
            self.cache_hits += len(texts) - len(miss_positions)
        assert all(vector is not None for vector in vectors)
        return vectors  # type: ignore[return-value]
