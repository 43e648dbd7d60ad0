"""Cosine-similarity top-k retrieval over an exact, persistable vector index.

The index is a deliberate brute-force scan: every query is scored against
every chunk with the same ``cosine`` function and sorted by (-score, chunk_id),
so results are total-ordered and bit-reproducible. Only chunk text is
embedded; titles are display-only context metadata.

Persisted index layout (little-endian, version byte required):

    magic           4 bytes  b"RMVI"
    version         u8       currently 1
    dimension       u32
    count           u32
    provider_id     u16 length + UTF-8 bytes
    model_id        u16 length + UTF-8 bytes
    vectors         count * dimension * float32
    chunk id table  count * (u16 length + UTF-8 bytes)
"""

from __future__ import annotations

import logging
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .cache import CachedEmbedder, EmbeddingCache
from .corpus import Chunk, Question
from .errors import IntegrityError
from .ioutils import atomic_write_bytes
from .providers import BaseEmbedder, EmbedKind

logger = logging.getLogger(__name__)

INDEX_MAGIC = b"RMVI"
INDEX_VERSION = 1


def cosine(u: Sequence[float] | np.ndarray, v: Sequence[float] | np.ndarray) -> float:
    """Cosine similarity dot(u, v) / (|u| |v|), clamped into [-1, 1]."""
    au = np.asarray(u, dtype=np.float64)
    av = np.asarray(v, dtype=np.float64)
    if au.ndim != 1 or av.ndim != 1 or au.shape != av.shape:
        raise ValueError("cosine requires two 1-D vectors of equal dimension")
    norm_u = math.sqrt(float(np.dot(au, au)))
    norm_v = math.sqrt(float(np.dot(av, av)))
    if norm_u == 0.0 or norm_v == 0.0:
        raise ValueError("cosine is undefined for a zero vector")
    if np.array_equal(au, av):
        return 1.0  # exact by definition; avoids |u||u| rounding below 1
    return min(1.0, max(-1.0, float(np.dot(au, av)) / (norm_u * norm_v)))


@dataclass(frozen=True)
class ScoredChunk:
    chunk_id: str
    score: float
    rank: int


@dataclass(frozen=True)
class RetrievalResult:
    question_id: str
    k: int
    ranked: tuple[ScoredChunk, ...]

    def chunk_ids(self) -> list[str]:
        return [scored.chunk_id for scored in self.ranked]


class VectorIndex:
    """Immutable chunk-id -> passage-vector index."""

    def __init__(
        self, chunk_ids: Sequence[str], vectors: np.ndarray, provider_id: str, model_id: str
    ):
        if vectors.ndim != 2 or vectors.shape[0] != len(chunk_ids):
            raise IntegrityError("vector matrix shape does not match the chunk id table")
        self.chunk_ids = list(chunk_ids)
        self.vectors = vectors.astype(np.float32, copy=False)
        self.vectors.setflags(write=False)
        self.provider_id = provider_id
        self.model_id = model_id

    def __len__(self) -> int:
        return len(self.chunk_ids)

    @property
    def dimension(self) -> int:
        return int(self.vectors.shape[1])

    @classmethod
    def build(
        cls,
        chunks: Sequence[Chunk],
        embedder: BaseEmbedder,
        *,
        cache: EmbeddingCache | None = None,
    ) -> "VectorIndex":
        """Embed every chunk text with Passage kind and freeze the result."""
        if not chunks:
            raise ValueError("cannot build an index over an empty corpus")
        ids = [chunk.chunk_id for chunk in chunks]
        if len(set(ids)) != len(ids):
            raise IntegrityError("duplicate chunk ids in index build input")
        source: BaseEmbedder = CachedEmbedder(embedder, cache) if cache is not None else embedder
        vectors = source.embed_texts([chunk.text for chunk in chunks], EmbedKind.PASSAGE)
        dims = {vector.shape for vector in vectors}
        if len(dims) != 1:
            raise IntegrityError(f"embedder returned mixed dimensions: {sorted(dims)}")
        matrix = np.stack(vectors).astype(np.float32)
        if not np.all(np.isfinite(matrix)):
            raise IntegrityError("embedder returned non-finite vector values")
        logger.info("built index: %d chunks, dimension %d", len(ids), matrix.shape[1])
        return cls(ids, matrix, embedder.provider_id, embedder.model_id)

    def save(self, path: Path | str) -> None:
        out = bytearray()
        out += INDEX_MAGIC
        out += struct.pack("<B", INDEX_VERSION)
        out += struct.pack("<II", self.dimension, len(self))
        for field in (self.provider_id, self.model_id):
            raw = field.encode("utf-8")
            out += struct.pack("<H", len(raw)) + raw
        out += np.ascontiguousarray(self.vectors, dtype="<f4").tobytes()
        for chunk_id in self.chunk_ids:
            raw = chunk_id.encode("utf-8")
            out += struct.pack("<H", len(raw)) + raw
        atomic_write_bytes(path, bytes(out))

    @classmethod
    def load(cls, path: Path | str) -> "VectorIndex":
        data = Path(path).read_bytes()
        if data[:4] != INDEX_MAGIC:
            raise IntegrityError(f"{path}: not an index file (bad magic)")
        offset = 4
        (version,) = struct.unpack_from("<B", data, offset)
        offset += 1
        if version != INDEX_VERSION:
            raise IntegrityError(f"{path}: unsupported index version {version}")
        dimension, count = struct.unpack_from("<II", data, offset)
        offset += 8
        fields = []
        for _ in range(2):
            (length,) = struct.unpack_from("<H", data, offset)
            offset += 2
            fields.append(data[offset : offset + length].decode("utf-8"))
            offset += length
        vector_bytes = count * dimension * 4
        matrix = np.frombuffer(data, dtype="<f4", count=count * dimension, offset=offset)
        matrix = matrix.reshape(count, dimension)
        offset += vector_bytes
        chunk_ids = []
        for _ in range(count):
            (length,) = struct.unpack_from("<H", data, offset)
            offset += 2
            chunk_ids.append(data[offset : offset + length].decode("utf-8"))
            offset += length
        if offset != len(data):
            raise IntegrityError(f"{path}: trailing bytes after index payload")
        return cls(chunk_ids, matrix.copy(), fields[0], fields[1])


def retrieve(
    index: VectorIndex,
    embedder: BaseEmbedder,
    question: Question,
    k: int,
    *,
    cache: EmbeddingCache | None = None,
) -> RetrievalResult:
    """Exhaustively score all chunks and return the top min(k, |index|).

    Ties are broken by ascending chunk id so the ordering is total and runs
    are reproducible.
    """
    if k < 1:
        raise ValueError("k must be positive")
    source: BaseEmbedder = CachedEmbedder(embedder, cache) if cache is not None else embedder
    query_vector = source.embed_texts([question.text], EmbedKind.QUERY)[0]
    if query_vector.shape[0] != index.dimension:
        raise IntegrityError(
            f"query dimension {query_vector.shape[0]} does not match index dimension {index.dimension}"
        )
    scored = sorted(
        ((cosine(query_vector, index.vectors[i]), chunk_id) for i, chunk_id in enumerate(index.chunk_ids)),
        key=lambda pair: (-pair[0], pair[1]),
    )
    top = scored[: min(k, len(index))]
    ranked = tuple(
        ScoredChunk(chunk_id=chunk_id, score=score, rank=rank)
        for rank, (score, chunk_id) in enumerate(top, start=1)
    )
    return RetrievalResult(question_id=question.question_id, k=k, ranked=ranked)


def write_trec_run(path: Path | str, results: Sequence[RetrievalResult], tag: str = "ragmeter") -> None:
    """Export results in TREC run format: ``qid Q0 chunk_id rank score tag``."""
    lines = []
    for result in results:
        for scored in result.ranked:
            lines.append(
                f"{result.question_id} Q0 {scored.chunk_id} {scored.rank} {scored.score:.6f} {tag}"
            )
    atomic_write_bytes(path, ("\n".join(lines) + "\n" if lines else "").encode("utf-8"))
