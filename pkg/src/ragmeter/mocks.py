"""Deterministic mock providers for hermetic, offline pipeline runs.

All three mocks are pure functions of their inputs, count their invocations
(for cache-contract tests), and never touch the network:

* ``HashEmbedder``     -- hashed bag-of-tokens vectors; token overlap drives
  cosine similarity, so retrieval over synthetic corpora is predictable.
* ``OracleGenerator``  -- answers from the rendered prompt alone: returns the
  first known gold answer whose string occurs in any context line, else the
  ``NO_ANSWER`` sentinel.
* ``EqualityJudge``    -- replies "Yes" when the prediction equals any
  ground-truth answer after answer normalization.
"""

from __future__ import annotations

import hashlib
import re
import threading
from typing import Mapping, Sequence

import numpy as np

from .errors import ProviderError
from .providers import BaseCompleter, BaseEmbedder, EmbedKind
from .text import normalize_answer, normalize_text

NO_ANSWER = "UNKNOWN"

_QUESTION_LINE_RE = re.compile(r"^Question: (.*?) ?$", re.MULTILINE)
_CONTEXT_BLOCK_RE = re.compile(
    r"Relevant Document chunks:\n(.*?)\n\nAfter considering", re.DOTALL
)
_REFERENCES_LINE_RE = re.compile(r"^Ground-truth answers: (.*)$", re.MULTILINE)
_PREDICTION_LINE_RE = re.compile(r"^Prediction: (.*)$", re.MULTILINE)
_QUOTED_RE = re.compile(r'"([^"]*)"')


def hash_bucket(token: str, dim: int) -> int:
    """Bucket index used by HashEmbedder; platform-stable."""
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % dim


class HashEmbedder(BaseEmbedder):
    """Embed text as a hashed bag of whitespace tokens.

    Each token is hashed (BLAKE2b, platform-stable) to a bucket count, so
    identical texts always produce identical vectors and cosine similarity
    tracks token overlap. Buckets are unsigned: shared tokens can only add
    similarity, which keeps synthetic-corpus rankings robust to stray
    bucket collisions.
    """

    provider_id = "mock"

    def __init__(self, dim: int = 1024, *, query_prefix: str = "", passage_prefix: str = ""):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = dim
        self.model_id = f"hash-{dim}"
        self.query_prefix = query_prefix
        self.passage_prefix = passage_prefix
        self.calls = 0  # texts embedded
        self._lock = threading.Lock()

    def embed_texts(self, texts: Sequence[str], kind: EmbedKind) -> list[np.ndarray]:
        self.validate_texts(texts)
        prefix = self.query_prefix if kind is EmbedKind.QUERY else self.passage_prefix
        with self._lock:
            self.calls += len(texts)
        return [self._vector(prefix + text) for text in texts]

    def _vector(self, text: str) -> np.ndarray:
        tokens = normalize_text(text).split()
        if not tokens:
            raise ValueError("cannot embed empty text")
        vector = np.zeros(self.dim, dtype=np.float64)
        for token in tokens:
            vector[hash_bucket(token, self.dim)] += 1.0
        return vector


class OracleGenerator(BaseCompleter):
    """Answer-generation mock keyed on the question parsed out of the prompt."""

    provider_id = "mock"
    model_id = "oracle"

    def __init__(self, answers_by_question: Mapping[str, Sequence[str]]):
        self._answers = dict(answers_by_question)
        self.calls = 0
        self._lock = threading.Lock()

    def complete(
        self, prompt: str, *, temperature: float, max_tokens: int, sample_index: int = 0
    ) -> str:
        with self._lock:
            self.calls += 1
        question_match = _QUESTION_LINE_RE.search(prompt)
        context_match = _CONTEXT_BLOCK_RE.search(prompt)
        if question_match is None or context_match is None:
            raise ProviderError("oracle generator could not parse the answer prompt")
        question = question_match.group(1)
        if question not in self._answers:
            raise ProviderError(f"oracle generator knows no answers for question {question!r}")
        context_lines = context_match.group(1).split("\n")
        for answer in self._answers[question]:
            if any(answer in line for line in context_lines):
                return answer
        return NO_ANSWER


class EqualityJudge(BaseCompleter):
    """Yes/No verification mock: normalized string equality against any reference."""

    provider_id = "mock"
    model_id = "equality"

    def __init__(self) -> None:
        self.calls = 0
        self._lock = threading.Lock()

    def complete(
        self, prompt: str, *, temperature: float, max_tokens: int, sample_index: int = 0
    ) -> str:
        with self._lock:
            self.calls += 1
        references_match = _REFERENCES_LINE_RE.search(prompt)
        prediction_match = _PREDICTION_LINE_RE.search(prompt)
        if references_match is None or prediction_match is None:
            raise ProviderError("equality judge could not parse the judge prompt")
        references = _QUOTED_RE.findall(references_match.group(1))
        prediction = normalize_answer(prediction_match.group(1))
        matched = any(prediction == normalize_answer(reference) for reference in references)
        return "Yes" if matched else "No"


class FlakyCompleter(BaseCompleter):
    """Test helper: fail with a given error for selected prompts, else delegate."""

    provider_id = "mock"

    def __init__(self, inner: BaseCompleter, *, fail_when, error_factory):
        self.inner = inner
        self.model_id = inner.model_id
        self._fail_when = fail_when
        self._error_factory = error_factory

    def complete(
        self, prompt: str, *, temperature: float, max_tokens: int, sample_index: int = 0
    ) -> str:
        if self._fail_when(prompt):
            raise self._error_factory(prompt)
        return self.inner.complete(
            prompt, temperature=temperature, max_tokens=max_tokens, sample_index=sample_index
        )
