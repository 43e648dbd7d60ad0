"""Corpus and QA dataset ingestion, document chunking, chunk identity.

File formats (one JSON object per line):
  corpus:  {"id": str, "title": str, "text": str}
  dataset: {"id": str, "question": str, "answers": [str, ...], "gold_chunk_ids": [str, ...]}

Chunk ids are derived as ``<doc_id>#<ordinal>`` (zero-based window index) so the
same corpus always yields the same ids regardless of input ordering upstream.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import IntegrityError, ParseError
from .ioutils import iter_jsonl
from .text import normalize_text

logger = logging.getLogger(__name__)

DEFAULT_CHUNK_TOKENS = 100
DEFAULT_CHUNK_OVERLAP = 0


@dataclass(frozen=True)
class Document:
    doc_id: str
    title: str
    body: str


@dataclass(frozen=True)
class Chunk:
    chunk_id: str
    doc_id: str
    title: str
    text: str
    token_count: int


@dataclass(frozen=True)
class Question:
    question_id: str
    text: str
    gold_answers: tuple[str, ...]
    gold_chunk_ids: tuple[str, ...]


def _required_str(record: dict, key: str, path: str, lineno: int) -> str:
    value = record.get(key)
    if not isinstance(value, str):
        raise ParseError(f"field {key!r} missing or not a string", path=path, line=lineno)
    return value


def _required_str_list(record: dict, key: str, path: str, lineno: int) -> list[str]:
    value = record.get(key)
    if not isinstance(value, list) or not all(isinstance(item, str) for item in value):
        raise ParseError(f"field {key!r} missing or not a list of strings", path=path, line=lineno)
    return value


def ingest_corpus(path: Path | str) -> list[Document]:
    """Load a corpus JSONL file, normalizing bodies and rejecting duplicate ids."""
    path = Path(path)
    documents: list[Document] = []
    seen: set[str] = set()
    for lineno, record in iter_jsonl(path):
        doc_id = _required_str(record, "id", str(path), lineno)
        title = _required_str(record, "title", str(path), lineno)
        body = normalize_text(_required_str(record, "text", str(path), lineno))
        if doc_id in seen:
            raise IntegrityError(f"duplicate document id {doc_id!r} at {path}:{lineno}")
        if not body:
            raise IntegrityError(f"document {doc_id!r} has an empty body after normalization")
        seen.add(doc_id)
        documents.append(Document(doc_id=doc_id, title=normalize_text(title), body=body))
    logger.info("loaded %d documents from %s", len(documents), path)
    return documents


def load_dataset(path: Path | str) -> list[Question]:
    """Load the QA dataset JSONL file. Gold chunk resolution happens separately."""
    path = Path(path)
    questions: list[Question] = []
    seen: set[str] = set()
    for lineno, record in iter_jsonl(path):
        question_id = _required_str(record, "id", str(path), lineno)
        text = normalize_text(_required_str(record, "question", str(path), lineno))
        answers = tuple(normalize_text(a) for a in _required_str_list(record, "answers", str(path), lineno))
        gold_ids = tuple(_required_str_list(record, "gold_chunk_ids", str(path), lineno))
        if question_id in seen:
            raise IntegrityError(f"duplicate question id {question_id!r} at {path}:{lineno}")
        if not gold_ids:
            raise IntegrityError(f"question {question_id!r} has no gold_chunk_ids")
        seen.add(question_id)
        questions.append(Question(question_id, text, answers, gold_ids))
    logger.info("loaded %d questions from %s", len(questions), path)
    return questions


def chunk_document(
    doc: Document,
    max_tokens: int = DEFAULT_CHUNK_TOKENS,
    overlap: int = DEFAULT_CHUNK_OVERLAP,
) -> list[Chunk]:
    """Split a document into fixed-size token windows.

    Windows advance by ``max_tokens - overlap`` so consecutive chunks share
    ``overlap`` tokens. An empty body yields an empty list.
    """
    if max_tokens < 1:
        raise ValueError("max_tokens must be positive")
    if overlap < 0 or overlap >= max_tokens:
        raise ValueError("overlap must satisfy 0 <= overlap < max_tokens")
    tokens = normalize_text(doc.body).split()
    chunks: list[Chunk] = []
    step = max_tokens - overlap
    start = 0
    ordinal = 0
    while start < len(tokens):
        window = tokens[start : start + max_tokens]
        chunks.append(
            Chunk(
                chunk_id=f"{doc.doc_id}#{ordinal}",
                doc_id=doc.doc_id,
                title=doc.title,
                text=" ".join(window),
                token_count=len(window),
            )
        )
        if start + max_tokens >= len(tokens):
            break
        start += step
        ordinal += 1
    return chunks


def chunk_corpus(
    documents: Iterable[Document],
    max_tokens: int = DEFAULT_CHUNK_TOKENS,
    overlap: int = DEFAULT_CHUNK_OVERLAP,
) -> list[Chunk]:
    """Chunk every document; chunking is a pure per-document transform."""
    chunks: list[Chunk] = []
    for doc in documents:
        chunks.extend(chunk_document(doc, max_tokens=max_tokens, overlap=overlap))
    return chunks


def chunks_by_id(chunks: Iterable[Chunk]) -> dict[str, Chunk]:
    index: dict[str, Chunk] = {}
    for chunk in chunks:
        if chunk.chunk_id in index:
            raise IntegrityError(f"duplicate chunk id {chunk.chunk_id!r}")
        index[chunk.chunk_id] = chunk
    return index


def require_gold_chunks(
    questions: Sequence[Question], chunk_index: Mapping[str, Chunk]
) -> None:
    """Fail hard when any gold chunk id does not resolve against the chunked corpus.

    Annotation drift must surface as a load error, never as a silent skip that
    a downstream discrepancy analysis could mistake for real content drift.
    """
    missing: list[str] = []
    for question in questions:
        for chunk_id in question.gold_chunk_ids:
            if chunk_id not in chunk_index:
                missing.append(f"{question.question_id} -> {chunk_id}")
    if missing:
        preview = "; ".join(missing[:5])
        raise IntegrityError(
            f"{len(missing)} gold chunk reference(s) do not resolve: {preview}"
        )
