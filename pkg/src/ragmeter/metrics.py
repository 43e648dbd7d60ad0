"""Retrieval metrics and rank statistics: P/R/F1@k, MRR, NDCG@k, Spearman's rho."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Collection, Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class RankAgnosticScores:
    k: int
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class CorrelationResult:
    """Spearman correlation over one evaluation subset; rho is None when undefined."""

    rho: float | None
    n: int
    subset: str
    reason: str | None = None


def rank_agnostic_at_k(
    retrieved: Sequence[str], gold: Collection[str], k: int
) -> RankAgnosticScores:
    """Precision/recall/F1 over the top-k retrieved ids against the gold set.

    The precision denominator is k even when fewer than k items were retrieved,
    matching the fixed-k framing used in per-k reports.
    """
    if k < 1:
        raise ValueError("k must be positive")
    gold_set = set(gold)
    if not gold_set:
        raise ValueError("gold set must be non-empty")
    hits = set(retrieved[:k]) & gold_set
    precision = len(hits) / k
    recall = len(hits) / len(gold_set)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return RankAgnosticScores(k=k, precision=precision, recall=recall, f1=f1)


def mrr(results: Iterable[tuple[Sequence[str], Collection[str]]]) -> float:
    """Mean reciprocal rank of the first gold hit; 0 contribution when nothing hits."""
    reciprocal_ranks: list[float] = []
    for retrieved, gold in results:
        gold_set = set(gold)
        if not gold_set:
            raise ValueError("gold set must be non-empty")
        rank = next((i + 1 for i, cid in enumerate(retrieved) if cid in gold_set), None)
        reciprocal_ranks.append(0.0 if rank is None else 1.0 / rank)
    if not reciprocal_ranks:
        raise ValueError("MRR is undefined for an empty result list")
    return sum(reciprocal_ranks) / len(reciprocal_ranks)


def ndcg_at_k(retrieved: Sequence[str], gold: Collection[str], k: int) -> float:
    """Binary-relevance NDCG: gain 1 at gold positions, discount 1/log2(rank + 1)."""
    if k < 1:
        raise ValueError("k must be positive")
    gold_set = set(gold)
    if not gold_set:
        raise ValueError("gold set must be non-empty")
    dcg = sum(1.0 / math.log2(i + 2) for i, cid in enumerate(retrieved[:k]) if cid in gold_set)
    if dcg == 0.0:
        return 0.0
    ideal_hits = min(k, len(gold_set))
    idcg = sum(1.0 / math.log2(i + 2) for i in range(ideal_hits))
    return min(1.0, dcg / idcg)


def rank_average(values: Sequence[float]) -> np.ndarray:
    """1-based ranks with ties assigned the average of the covered positions."""
    a = np.asarray(values, dtype=np.float64)
    order = np.argsort(a, kind="mergesort")
    ranks = np.empty(a.size, dtype=np.float64)
    i = 0
    while i < a.size:
        j = i
        while j + 1 < a.size and a[order[j + 1]] == a[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman_rho(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman correlation: Pearson over average-ranked values.

    Raises ValueError on constant input rather than returning NaN; silent
    zeros would corrupt correlation reports.
    """
    ax = np.asarray(x, dtype=np.float64)
    ay = np.asarray(y, dtype=np.float64)
    if ax.ndim != 1 or ay.ndim != 1 or ax.size != ay.size:
        raise ValueError("x and y must be 1-D sequences of equal length")
    if ax.size < 2:
        raise ValueError("need at least two samples")
    if np.unique(ax).size < 2 or np.unique(ay).size < 2:
        raise ValueError("rho is undefined for constant input")
    rx = rank_average(ax)
    ry = rank_average(ay)
    rx -= rx.mean()
    ry -= ry.mean()
    denom = math.sqrt(float(np.dot(rx, rx)) * float(np.dot(ry, ry)))
    rho = float(np.dot(rx, ry)) / denom
    return min(1.0, max(-1.0, rho))
