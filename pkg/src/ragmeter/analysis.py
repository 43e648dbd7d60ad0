"""Per-question evaluation records, failure classification, and report building.

Three binary signals are joined per (question, k):

* ``recall_hit``        -- a gold chunk appears in the top-k retrieval.
* ``semi_gold_match``   -- the system answer matches the semi-gold answers
  (answers the same generator produced from the gold chunks).
* ``end_to_end_match``  -- the system answer matches the dataset gold answers.

Failure classes are the two disagreement patterns against the end-to-end
signal. A "conventional metric" failure (recall disagrees with end-to-end)
covers both a miss that still answered correctly -- unlabeled or drifted
chunks carrying the answer -- and a hit that answered wrongly, where
near-duplicate context distracted the generator. A "semi-gold judge" failure
(the semi-gold comparison disagrees with end-to-end) covers reference-answer
generation or verdict-comparison mistakes; these are not mechanically
separable further without human labels, so they are reported as one class
with audit links to the raw verdicts.

The refined subset drops the conventional failures; on it, recall and the
end-to-end signal agree by construction.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from .errors import IntegrityError
from .generation import GeneratedAnswer
from .judge import AnswerComparator, Verdict
from .metrics import CorrelationResult, RankAgnosticScores, spearman_rho

logger = logging.getLogger(__name__)

SEMI_GOLD_JUDGE_MODES = ("multi", "per_reference")


class FailureClass(str, Enum):
    NONE = "none"
    CONVENTIONAL = "conventional_metric"
    SEMI_GOLD = "semi_gold_judge"
    BOTH = "both"


def classify_failure(recall_hit: bool, semi_gold_match: bool, end_to_end_match: bool) -> FailureClass:
    conventional = recall_hit != end_to_end_match
    semi_gold = semi_gold_match != end_to_end_match
    if conventional and semi_gold:
        return FailureClass.BOTH
    if conventional:
        return FailureClass.CONVENTIONAL
    if semi_gold:
        return FailureClass.SEMI_GOLD
    return FailureClass.NONE


@dataclass(frozen=True)
class QuestionEvalRecord:
    question_id: str
    k: int
    recall_hit: bool
    scores: RankAgnosticScores
    semi_gold_match: bool
    end_to_end_match: bool
    failure_class: FailureClass

    @classmethod
    def build(
        cls,
        question_id: str,
        k: int,
        recall_hit: bool,
        scores: RankAgnosticScores,
        semi_gold_match: bool,
        end_to_end_match: bool,
    ) -> "QuestionEvalRecord":
        return cls(
            question_id=question_id,
            k=k,
            recall_hit=recall_hit,
            scores=scores,
            semi_gold_match=semi_gold_match,
            end_to_end_match=end_to_end_match,
            failure_class=classify_failure(recall_hit, semi_gold_match, end_to_end_match),
        )

    def to_record(self) -> dict:
        return {
            "question_id": self.question_id,
            "k": self.k,
            "recall_hit": self.recall_hit,
            "precision": self.scores.precision,
            "recall": self.scores.recall,
            "f1": self.scores.f1,
            "semi_gold_match": self.semi_gold_match,
            "end_to_end_match": self.end_to_end_match,
            "failure_class": self.failure_class.value,
        }

    @classmethod
    def from_record(cls, record: dict) -> "QuestionEvalRecord":
        scores = RankAgnosticScores(
            k=int(record["k"]),
            precision=float(record["precision"]),
            recall=float(record["recall"]),
            f1=float(record["f1"]),
        )
        return cls(
            question_id=record["question_id"],
            k=int(record["k"]),
            recall_hit=bool(record["recall_hit"]),
            scores=scores,
            semi_gold_match=bool(record["semi_gold_match"]),
            end_to_end_match=bool(record["end_to_end_match"]),
            failure_class=FailureClass(record["failure_class"]),
        )


def _dedupe(texts: Iterable[str]) -> list[str]:
    seen: set[str] = set()
    out: list[str] = []
    for text in texts:
        if text not in seen:
            seen.add(text)
            out.append(text)
    return out


def semi_gold_verdict(
    comparator: AnswerComparator,
    question_id: str,
    question_text: str,
    rag_answer: GeneratedAnswer,
    semi_gold_answers: Sequence[GeneratedAnswer],
    *,
    mode: str = "multi",
) -> Verdict:
    """Compare the system answer against the deduplicated semi-gold answers.

    ``multi`` passes all references in one comparator call; ``per_reference``
    makes one call per reference and ORs the decisions.
    """
    if not semi_gold_answers:
        raise ValueError("semi-gold answer list must be non-empty")
    if mode not in SEMI_GOLD_JUDGE_MODES:
        raise ValueError(f"mode must be one of {SEMI_GOLD_JUDGE_MODES}")
    references = _dedupe(answer.text for answer in semi_gold_answers)
    if mode == "multi":
        return comparator.decide(question_id, question_text, references, rag_answer.text)
    verdicts = [
        comparator.decide(question_id, question_text, [reference], rag_answer.text)
        for reference in references
    ]
    return Verdict(
        question_id=question_id,
        comparator=comparator.kind,
        decision=any(v.decision for v in verdicts),
        references=tuple(references),
        prediction=rag_answer.text,
        raw_output="\n---\n".join(v.raw_output for v in verdicts if v.raw_output),
    )


def refine(records: Sequence[QuestionEvalRecord]) -> list[QuestionEvalRecord]:
    """Drop records whose failure class includes a conventional-metric failure."""
    return [
        record
        for record in records
        if record.failure_class not in (FailureClass.CONVENTIONAL, FailureClass.BOTH)
    ]


def _correlation(records: Sequence[QuestionEvalRecord], subset: str) -> CorrelationResult:
    n = len(records)
    if n < 2:
        return CorrelationResult(rho=None, n=n, subset=subset, reason="fewer than two records")
    x = [1.0 if record.semi_gold_match else 0.0 for record in records]
    y = [1.0 if record.recall_hit else 0.0 for record in records]
    try:
        rho = spearman_rho(x, y)
    except ValueError as exc:
        return CorrelationResult(rho=None, n=n, subset=subset, reason=str(exc))
    return CorrelationResult(rho=rho, n=n, subset=subset)


@dataclass(frozen=True)
class KReport:
    """Aggregates for one k: failure counts, mean metrics, match rates, correlations."""

    k: int
    questions: int
    recall_failures: int
    semi_gold_failures: int
    miss_but_correct: int
    hit_but_wrong: int
    failure_class_counts: dict
    mean_precision: float
    mean_recall: float
    mean_f1: float
    semi_gold_match_rate: float
    end_to_end_rate: float
    correlation_all: CorrelationResult
    correlation_refined: CorrelationResult

    def to_dict(self) -> dict:
        def corr(result: CorrelationResult) -> dict:
            payload: dict = {"rho": result.rho, "n": result.n}
            if result.reason is not None:
                payload["undefined_reason"] = result.reason
            return payload

        return {
            "k": self.k,
            "questions": self.questions,
            "recall_failures": self.recall_failures,
            "semi_gold_failures": self.semi_gold_failures,
            "miss_but_correct": self.miss_but_correct,
            "hit_but_wrong": self.hit_but_wrong,
            "failure_class_counts": self.failure_class_counts,
            "mean_precision": self.mean_precision,
            "mean_recall": self.mean_recall,
            "mean_f1": self.mean_f1,
            "semi_gold_match_rate": self.semi_gold_match_rate,
            "end_to_end_rate": self.end_to_end_rate,
            "correlation": {"all": corr(self.correlation_all), "refined": corr(self.correlation_refined)},
        }


@dataclass(frozen=True)
class EvalReport:
    k_values: tuple[int, ...]
    per_k: dict = field(default_factory=dict)  # k -> KReport
    skipped_questions: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "k_values": list(self.k_values),
            "per_k": {str(k): self.per_k[k].to_dict() for k in self.k_values},
            "skipped_questions": list(self.skipped_questions),
        }


def build_report(
    records: Sequence[QuestionEvalRecord],
    k_values: Sequence[int],
    *,
    skipped_questions: Sequence[str] = (),
) -> EvalReport:
    """Aggregate per-(question, k) records into per-k counts, rates, and correlations.

    Requires exactly one record per (question, k) pair with an identical
    question set at every k. Undefined correlations (constant columns or too
    few records) are recorded as such rather than failing the run.
    """
    by_k: dict[int, list[QuestionEvalRecord]] = {k: [] for k in k_values}
    for record in records:
        if record.k not in by_k:
            raise IntegrityError(f"record for unexpected k={record.k}")
        by_k[record.k].append(record)

    question_sets = {k: {record.question_id for record in group} for k, group in by_k.items()}
    for k, group in by_k.items():
        if len(group) != len(question_sets[k]):
            raise IntegrityError(f"duplicate (question, k) records at k={k}")
    expected = question_sets[k_values[0]] if k_values else set()
    for k, ids in question_sets.items():
        if ids != expected:
            raise IntegrityError(f"question coverage differs between k={k_values[0]} and k={k}")

    per_k: dict[int, KReport] = {}
    for k in k_values:
        group = sorted(by_k[k], key=lambda record: record.question_id)
        n = len(group)
        if n == 0:
            raise IntegrityError(f"no records for k={k}")
        refined = refine(group)
        class_counts = {fc.value: 0 for fc in FailureClass}
        for record in group:
            class_counts[record.failure_class.value] += 1
        per_k[k] = KReport(
            k=k,
            questions=n,
            recall_failures=sum(1 for r in group if r.recall_hit != r.end_to_end_match),
            semi_gold_failures=sum(1 for r in group if r.semi_gold_match != r.end_to_end_match),
            miss_but_correct=sum(1 for r in group if not r.recall_hit and r.end_to_end_match),
            hit_but_wrong=sum(1 for r in group if r.recall_hit and not r.end_to_end_match),
            failure_class_counts=class_counts,
            mean_precision=sum(r.scores.precision for r in group) / n,
            mean_recall=sum(r.scores.recall for r in group) / n,
            mean_f1=sum(r.scores.f1 for r in group) / n,
            semi_gold_match_rate=sum(1 for r in group if r.semi_gold_match) / n,
            end_to_end_rate=sum(1 for r in group if r.end_to_end_match) / n,
            correlation_all=_correlation(group, "all"),
            correlation_refined=_correlation(refined, "refined"),
        )
    return EvalReport(
        k_values=tuple(k_values), per_k=per_k, skipped_questions=tuple(sorted(skipped_questions))
    )


_CSV_COLUMNS = (
    "k",
    "questions",
    "recall_failures",
    "semi_gold_failures",
    "miss_but_correct",
    "hit_but_wrong",
    "mean_precision",
    "mean_recall",
    "mean_f1",
    "semi_gold_match_rate",
    "end_to_end_rate",
    "rho_all",
    "rho_refined",
)


def report_csv_rows(report: EvalReport) -> list[list[str]]:
    """Flatten the per-k blocks to CSV rows; undefined correlations render empty."""
    rows = [list(_CSV_COLUMNS)]
    for k in report.k_values:
        block = report.per_k[k]
        rows.append(
            [
                str(block.k),
                str(block.questions),
                str(block.recall_failures),
                str(block.semi_gold_failures),
                str(block.miss_but_correct),
                str(block.hit_but_wrong),
                f"{block.mean_precision:.6f}",
                f"{block.mean_recall:.6f}",
                f"{block.mean_f1:.6f}",
                f"{block.semi_gold_match_rate:.6f}",
                f"{block.end_to_end_rate:.6f}",
                "" if block.correlation_all.rho is None else f"{block.correlation_all.rho:.6f}",
                "" if block.correlation_refined.rho is None else f"{block.correlation_refined.rho:.6f}",
            ]
        )
    return rows
