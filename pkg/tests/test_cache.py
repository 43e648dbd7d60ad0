import numpy as np

from ragmeter.cache import (
    CachedCompleter,
    CachedEmbedder,
    CompletionCache,
    EmbeddingCache,
    cache_key,
    embedding_cache_key,
)
from ragmeter.mocks import HashEmbedder
from ragmeter.providers import BaseCompleter, EmbedKind


class CountingCompleter(BaseCompleter):
    provider_id = "test"
    model_id = "counting"

    def __init__(self):
        self.calls = 0

    def complete(self, prompt, *, temperature, max_tokens, sample_index=0):
        self.calls += 1
        return f"reply:{prompt}:{sample_index}"


def test_cache_key_is_deterministic():
    assert cache_key("m", "prompt", 0.5, 1) == cache_key("m", "prompt", 0.5, 1)


def test_cache_key_includes_sample_index():
    assert cache_key("m", "prompt", 0.5, 0) != cache_key("m", "prompt", 0.5, 1)


def test_cache_key_includes_temperature_and_model():
    assert cache_key("m", "p", 0.0, 0) != cache_key("m", "p", 0.5, 0)
    assert cache_key("m1", "p", 0.0, 0) != cache_key("m2", "p", 0.0, 0)


def test_cache_key_avalanche_on_single_character_change():
    assert cache_key("m", "prompt a", 0.0, 0) != cache_key("m", "prompt b", 0.0, 0)


def test_cache_key_fields_cannot_collide_across_boundaries():
    # length prefixing keeps ("ab", "c") distinct from ("a", "bc")
    assert cache_key("ab", "c", 0.0, 0) != cache_key("a", "bc", 0.0, 0)


def test_completion_cache_roundtrip(tmp_path):
    cache = CompletionCache(tmp_path)
    key = cache_key("m", "p", 0.0, 0)
    assert cache.get(key) is None
    cache.put(key, "hello")
    assert cache.get(key) == "hello"
    cache.put(key, "hello")  # idempotent re-put
    assert cache.get(key) == "hello"


def test_embedding_cache_roundtrip(tmp_path):
    cache = EmbeddingCache(tmp_path)
    key = embedding_cache_key("p", "m", EmbedKind.QUERY, "text")
    assert cache.get(key) is None
    cache.put(key, np.array([1.0, -2.5, 3.0]))
    assert np.array_equal(cache.get(key), np.array([1.0, -2.5, 3.0]))


def test_embedding_cache_key_separates_kinds():
    query_key = embedding_cache_key("p", "m", EmbedKind.QUERY, "text")
    passage_key = embedding_cache_key("p", "m", EmbedKind.PASSAGE, "text")
    assert query_key != passage_key


def test_cached_completer_hits_skip_provider(tmp_path):
    inner = CountingCompleter()
    cached = CachedCompleter(inner, CompletionCache(tmp_path))
    first = cached.complete("p", temperature=0.0, max_tokens=8, sample_index=0)
    second = cached.complete("p", temperature=0.0, max_tokens=8, sample_index=0)
    assert first == second
    assert inner.calls == 1
    assert cached.provider_calls == 1
    assert cached.cache_hits == 1


def test_cached_completer_distinguishes_samples(tmp_path):
    inner = CountingCompleter()
    cached = CachedCompleter(inner, CompletionCache(tmp_path))
    cached.complete("p", temperature=0.5, max_tokens=8, sample_index=0)
    cached.complete("p", temperature=0.5, max_tokens=8, sample_index=1)
    assert inner.calls == 2


def test_cached_embedder_partial_batch(tmp_path):
    inner = HashEmbedder(dim=16)
    cache = EmbeddingCache(tmp_path)
    cached = CachedEmbedder(inner, cache)
    cached.embed_texts(["a", "b"], EmbedKind.PASSAGE)
    assert cached.provider_calls == 2
    vectors = cached.embed_texts(["a", "b", "c"], EmbedKind.PASSAGE)
    assert cached.provider_calls == 3  # only "c" was a miss
    assert cached.cache_hits == 2
    fresh = HashEmbedder(dim=16).embed_texts(["a", "b", "c"], EmbedKind.PASSAGE)
    for got, expected in zip(vectors, fresh):
        assert np.array_equal(got, expected)


def test_cached_embedder_shared_cache_across_instances(tmp_path):
    cache = EmbeddingCache(tmp_path)
    CachedEmbedder(HashEmbedder(dim=16), cache).embed_texts(["a"], EmbedKind.QUERY)
    warmed = CachedEmbedder(HashEmbedder(dim=16), cache)
    warmed.embed_texts(["a"], EmbedKind.QUERY)
    assert warmed.provider_calls == 0
    assert warmed.cache_hits == 1


def test_embedding_cache_reput_is_idempotent(tmp_path):
    cache = EmbeddingCache(tmp_path)
    key = embedding_cache_key("p", "m", EmbedKind.QUERY, "t")
    vector = np.array([0.5, 1.5])
    cache.put(key, vector)
    cache.put(key, vector)
    assert np.array_equal(cache.get(key), vector)
