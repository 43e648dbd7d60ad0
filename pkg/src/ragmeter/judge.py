"""Answer match verdicts: LLM judge, exact match, token overlap, embedding similarity.

All comparators use any-match semantics across the reference answers: one
matching reference yields Yes. Adding a reference can therefore flip No to
Yes but never Yes to No.
"""

from __future__ import annotations

import logging
import re
from abc import ABC, abstractmethod
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .errors import JudgeParseError
from .prompts import render_judge_prompt
from .providers import BaseCompleter, BaseEmbedder, EmbedKind
from .retriever import cosine
from .text import normalize_answer

logger = logging.getLogger(__name__)

DEFAULT_TOKEN_OVERLAP_THRESHOLD = 0.5
DEFAULT_EMBEDDING_THRESHOLD = 0.85
JUDGE_MAX_TOKENS = 8

_LEADING_WORD_RE = re.compile(r"[A-Za-z]+")


class Comparator(str, Enum):
    LLM_JUDGE = "llm_judge"
    EXACT_MATCH = "exact_match"
    TOKEN_OVERLAP = "token_overlap"
    EMBEDDING_SIM = "embedding_sim"


@dataclass(frozen=True)
class Verdict:
    """One binary match decision with full audit provenance."""

    question_id: str
    comparator: Comparator
    decision: bool
    references: tuple[str, ...]
    prediction: str
    raw_output: str = ""

    def to_record(self) -> dict:
        return {
            "question_id": self.question_id,
            "comparator": self.comparator.value,
            "decision": self.decision,
            "references": list(self.references),
            "prediction": self.prediction,
            "raw_output": self.raw_output,
        }

    @classmethod
    def from_record(cls, record: dict) -> "Verdict":
        return cls(
            question_id=record["question_id"],
            comparator=Comparator(record["comparator"]),
            decision=bool(record["decision"]),
            references=tuple(record["references"]),
            prediction=record["prediction"],
            raw_output=record.get("raw_output", ""),
        )


def judge_exact(prediction: str, references: Sequence[str]) -> bool:
    """True iff the prediction equals any reference after answer normalization."""
    if not references:
        raise ValueError("references must be non-empty")
    normalized = normalize_answer(prediction)
    return any(normalized == normalize_answer(reference) for reference in references)


def unigram_f1(prediction: str, reference: str) -> float:
    """Unigram F1 over normalized tokens; 0.0 when either side normalizes to nothing."""
    pred_tokens = normalize_answer(prediction).split()
    ref_tokens = normalize_answer(reference).split()
    if not pred_tokens or not ref_tokens:
        return 0.0
    overlap = sum((Counter(pred_tokens) & Counter(ref_tokens)).values())
    if overlap == 0:
        return 0.0
    precision = overlap / len(pred_tokens)
    recall = overlap / len(ref_tokens)
    return 2 * precision * recall / (precision + recall)


def judge_token_overlap(
    prediction: str, references: Sequence[str], threshold: float = DEFAULT_TOKEN_OVERLAP_THRESHOLD
) -> bool:
    """True iff the best unigram F1 against any reference reaches the threshold."""
    if not references:
        raise ValueError("references must be non-empty")
    if not 0 < threshold <= 1:
        raise ValueError("threshold must be in (0, 1]")
    return max(unigram_f1(prediction, reference) for reference in references) >= threshold


def judge_embedding(
    embedder: BaseEmbedder,
    prediction: str,
    references: Sequence[str],
    threshold: float = DEFAULT_EMBEDDING_THRESHOLD,
) -> bool:
    """True iff the best cosine similarity against any reference reaches the threshold.

    Both sides are embedded with Query kind; answer comparison is symmetric so
    the query/passage distinction does not apply.
    """
    if not references:
        raise ValueError("references must be non-empty")
    if not -1 < threshold <= 1:
        raise ValueError("threshold must be in (-1, 1]")
    vectors = embedder.embed_texts([prediction, *references], EmbedKind.QUERY)
    prediction_vector = vectors[0]
    best = max(cosine(prediction_vector, reference_vector) for reference_vector in vectors[1:])
    return best >= threshold


def parse_judge_decision(raw: str) -> bool:
    """Map the judge reply to a decision via its first alphabetic token, case-folded."""
    match = _LEADING_WORD_RE.search(raw)
    word = match.group(0).casefold() if match else ""
    if word == "yes":
        return True
    if word == "no":
        return False
    raise JudgeParseError(f"judge reply is not a leading Yes/No: {raw!r}")


def judge_llm(
    provider: BaseCompleter,
    question: str,
    references: Sequence[str],
    prediction: str,
    *,
    question_id: str = "",
    on_unparsed: str = "error",
) -> Verdict:
    """Ask the judge provider for a Yes/No verdict; temperature is pinned to 0.

    ``on_unparsed`` selects the contract-violation fallback: "error" (default)
    raises, "no" records a No decision and keeps the raw reply for audit.
    """
    if not references:
        raise ValueError("references must be non-empty")
    if on_unparsed not in ("error", "no"):
        raise ValueError("on_unparsed must be 'error' or 'no'")
    prompt = render_judge_prompt(question, references, prediction)
    raw = provider.complete(prompt, temperature=0.0, max_tokens=JUDGE_MAX_TOKENS, sample_index=0)
    try:
        decision = parse_judge_decision(raw)
    except JudgeParseError:
        if on_unparsed == "error":
            raise
        logger.warning("unparseable judge reply treated as No: %r", raw)
        decision = False
    return Verdict(
        question_id=question_id,
        comparator=Comparator.LLM_JUDGE,
        decision=decision,
        references=tuple(references),
        prediction=prediction,
        raw_output=raw,
    )


class AnswerComparator(ABC):
    """Uniform comparator interface used by the evaluation pipeline."""

    kind: Comparator

    @abstractmethod
    def decide(
        self, question_id: str, question: str, references: Sequence[str], prediction: str
    ) -> Verdict:
        """Produce a Verdict for one prediction against the reference answers."""

    def _verdict(
        self, question_id: str, references: Sequence[str], prediction: str, decision: bool
    ) -> Verdict:
        return Verdict(
            question_id=question_id,
            comparator=self.kind,
            decision=decision,
            references=tuple(references),
            prediction=prediction,
        )


class ExactComparator(AnswerComparator):
    kind = Comparator.EXACT_MATCH

    def decide(self, question_id, question, references, prediction):
        return self._verdict(question_id, references, prediction, judge_exact(prediction, references))


class TokenOverlapComparator(AnswerComparator):
    kind = Comparator.TOKEN_OVERLAP

    def __init__(self, threshold: float = DEFAULT_TOKEN_OVERLAP_THRESHOLD):
        self.threshold = threshold

    def decide(self, question_id, question, references, prediction):
        decision = judge_token_overlap(prediction, references, self.threshold)
        return self._verdict(question_id, references, prediction, decision)


class EmbeddingComparator(AnswerComparator):
    kind = Comparator.EMBEDDING_SIM

    def __init__(self, embedder: BaseEmbedder, threshold: float = DEFAULT_EMBEDDING_THRESHOLD):
        self.embedder = embedder
        self.threshold = threshold

    def decide(self, question_id, question, references, prediction):
        decision = judge_embedding(self.embedder, prediction, references, self.threshold)
        return self._verdict(question_id, references, prediction, decision)


class LlmComparator(AnswerComparator):
    kind = Comparator.LLM_JUDGE

    def __init__(self, provider: BaseCompleter, *, on_unparsed: str = "error"):
        self.provider = provider
        self.on_unparsed = on_unparsed

    def decide(self, question_id, question, references, prediction):
        return judge_llm(
            self.provider,
            question,
            references,
            prediction,
            question_id=question_id,
            on_unparsed=self.on_unparsed,
        )


def make_comparator(
    kind: Comparator,
    *,
    judge_provider: BaseCompleter | None = None,
    embedder: BaseEmbedder | None = None,
    token_overlap_threshold: float = DEFAULT_TOKEN_OVERLAP_THRESHOLD,
    embedding_threshold: float = DEFAULT_EMBEDDING_THRESHOLD,
    on_unparsed: str = "error",
) -> AnswerComparator:
    if kind is Comparator.EXACT_MATCH:
        return ExactComparator()
    if kind is Comparator.TOKEN_OVERLAP:
        return TokenOverlapComparator(token_overlap_threshold)
    if kind is Comparator.EMBEDDING_SIM:
        if embedder is None:
            raise ValueError("embedding comparator requires an embedder")
        return EmbeddingComparator(embedder, embedding_threshold)
    if kind is Comparator.LLM_JUDGE:
        if judge_provider is None:
            raise ValueError("llm comparator requires a judge provider")
        return LlmComparator(judge_provider, on_unparsed=on_unparsed)
    raise ValueError(f"unknown comparator {kind!r}")
