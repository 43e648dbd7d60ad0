from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import pytest

from ragmeter.corpus import Chunk, Question
from ragmeter.providers import BaseEmbedder, EmbedKind

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURES_DIR = REPO_ROOT / "fixtures"
GOLDEN_DIR = Path(__file__).resolve().parent / "golden"


class StaticEmbedder(BaseEmbedder):
    """Test embedder with hand-picked vectors per exact text."""

    provider_id = "static"
    model_id = "static"

    def __init__(self, table: Mapping[str, Sequence[float]]):
        self.table = {text: np.asarray(vector, dtype=np.float64) for text, vector in table.items()}
        self.calls = 0

    def embed_texts(self, texts: Sequence[str], kind: EmbedKind) -> list[np.ndarray]:
        self.validate_texts(texts)
        self.calls += len(texts)
        return [self.table[text].copy() for text in texts]


def make_chunk(chunk_id: str, text: str, title: str = "Title") -> Chunk:
    return Chunk(
        chunk_id=chunk_id,
        doc_id=chunk_id.split("#")[0],
        title=title,
        text=text,
        token_count=len(text.split()),
    )


def make_question(
    question_id: str = "q1",
    text: str = "what is it",
    answers: Sequence[str] = ("answer",),
    gold_chunk_ids: Sequence[str] = ("d1#0",),
) -> Question:
    return Question(
        question_id=question_id,
        text=text,
        gold_answers=tuple(answers),
        gold_chunk_ids=tuple(gold_chunk_ids),
    )


@pytest.fixture(scope="session")
def bundled_fixtures() -> Path:
    assert (FIXTURES_DIR / "clean" / "corpus.jsonl").exists(), "bundled fixtures missing"
    return FIXTURES_DIR
