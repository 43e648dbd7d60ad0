"""Answer generation from retrieved or gold chunks via a completion provider.

Answers produced from gold chunks are the "semi-gold" reference answers: what
the same generator produces when handed an ideal retrieval. They are sampled
multiple times at a nonzero temperature (default 3 samples at 0.5) so answer
variety is covered; duplicates are kept here and deduplicated at judge time.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

from .corpus import Chunk, Question
from .errors import IntegrityError
from .prompts import render_answer_prompt
from .providers import BaseCompleter

logger = logging.getLogger(__name__)

SEMI_GOLD_SAMPLES = 3
SEMI_GOLD_TEMPERATURE = 0.5


class AnswerSource(str, Enum):
    RETRIEVED = "retrieved"
    GOLD = "gold"


@dataclass(frozen=True)
class GeneratorProfile:
    """Sampling configuration for one generator role (system-under-test or semi-gold)."""

    provider_id: str
    model_id: str
    temperature: float = 0.0
    samples: int = 1
    max_answer_tokens: int = 16

    def __post_init__(self) -> None:
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_answer_tokens < 1:
            raise ValueError("max_answer_tokens must be >= 1")


@dataclass(frozen=True)
class GeneratedAnswer:
    question_id: str
    source: AnswerSource
    text: str
    sample_index: int
    model_id: str
    temperature: float

    def to_record(self) -> dict:
        return {
            "question_id": self.question_id,
            "source": self.source.value,
            "sample_index": self.sample_index,
            "text": self.text,
            "model": self.model_id,
            "temperature": self.temperature,
        }

    @classmethod
    def from_record(cls, record: dict) -> "GeneratedAnswer":
        return cls(
            question_id=record["question_id"],
            source=AnswerSource(record["source"]),
            text=record["text"],
            sample_index=int(record["sample_index"]),
            model_id=record["model"],
            temperature=float(record["temperature"]),
        )


def generate_answers(
    provider: BaseCompleter,
    profile: GeneratorProfile,
    question: Question,
    chunks: Sequence[Chunk],
    source: AnswerSource,
) -> list[GeneratedAnswer]:
    """Produce exactly ``profile.samples`` answers for one question and context."""
    if not chunks:
        raise ValueError("cannot generate answers without context chunks")
    prompt = render_answer_prompt(question.text, chunks)
    answers: list[GeneratedAnswer] = []
    for sample_index in range(profile.samples):
        text = provider.complete(
            prompt,
            temperature=profile.temperature,
            max_tokens=profile.max_answer_tokens,
            sample_index=sample_index,
        ).strip()
        if not text:
            logger.warning(
                "empty answer for question %s (sample %d)", question.question_id, sample_index
            )
        answers.append(
            GeneratedAnswer(
                question_id=question.question_id,
                source=source,
                text=text,
                sample_index=sample_index,
                model_id=profile.model_id,
                temperature=profile.temperature,
            )
        )
    return answers


def generate_semi_gold(
    provider: BaseCompleter,
    profile: GeneratorProfile,
    question: Question,
    chunk_index: Mapping[str, Chunk],
) -> list[GeneratedAnswer]:
    """Generate the semi-gold reference answers from the question's gold chunks."""
    if not question.gold_chunk_ids:
        raise ValueError(f"question {question.question_id!r} has no gold chunks")
    gold_chunks: list[Chunk] = []
    for chunk_id in question.gold_chunk_ids:
        chunk = chunk_index.get(chunk_id)
        if chunk is None:
            raise IntegrityError(
                f"gold chunk {chunk_id!r} for question {question.question_id!r} does not resolve"
            )
        gold_chunks.append(chunk)
    return generate_answers(provider, profile, question, gold_chunks, AnswerSource.GOLD)
