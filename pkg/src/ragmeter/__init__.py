"""ragmeter: retriever evaluation harness for RAG question answering.

Measures a retriever through the answers it enables: the system's answers
(generated from retrieved chunks) are compared against semi-gold answers
(generated by the same model from the gold-labeled chunks) and against the
dataset's gold answers, alongside conventional retrieval metrics.
"""

__version__ = "0.1.0"

from .analysis import (
    EvalReport,
    FailureClass,
    QuestionEvalRecord,
    build_report,
    classify_failure,
    refine,
    semi_gold_verdict,
)
from .corpus import (
    Chunk,
    Document,
    Question,
    chunk_corpus,
    chunk_document,
    ingest_corpus,
    load_dataset,
    require_gold_chunks,
)
from .config import RunConfig, load_config
from .generation import (
    AnswerSource,
    GeneratedAnswer,
    GeneratorProfile,
    generate_answers,
    generate_semi_gold,
)
from .judge import (
    Comparator,
    Verdict,
    judge_embedding,
    judge_exact,
    judge_llm,
    judge_token_overlap,
    make_comparator,
)
from .metrics import (
    CorrelationResult,
    RankAgnosticScores,
    mrr,
    ndcg_at_k,
    rank_agnostic_at_k,
    spearman_rho,
)
from .retriever import RetrievalResult, ScoredChunk, VectorIndex, cosine, retrieve
from .text import normalize_answer, normalize_text

__all__ = [
    "__version__",
    "AnswerSource",
    "Chunk",
    "Comparator",
    "CorrelationResult",
    "Document",
    "EvalReport",
    "FailureClass",
    "GeneratedAnswer",
    "GeneratorProfile",
    "Question",
    "QuestionEvalRecord",
    "RankAgnosticScores",
    "RetrievalResult",
    "RunConfig",
    "ScoredChunk",
    "VectorIndex",
    "Verdict",
    "build_report",
    "chunk_corpus",
    "chunk_document",
    "classify_failure",
    "cosine",
    "generate_answers",
    "generate_semi_gold",
    "ingest_corpus",
    "judge_embedding",
    "judge_exact",
    "judge_llm",
    "judge_token_overlap",
    "load_config",
    "load_dataset",
    "make_comparator",
    "mrr",
    "ndcg_at_k",
    "normalize_answer",
    "normalize_text",
    "rank_agnostic_at_k",
    "refine",
    "require_gold_chunks",
    "retrieve",
    "semi_gold_verdict",
    "spearman_rho",
]
