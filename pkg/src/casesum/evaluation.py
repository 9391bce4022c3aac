"""Retrieval metrics and the leave-one-out validation harness.

MRR, MAP and per-query-averaged precision/recall/F1 over top-k
predictions.  Conventions: a ranking with no relevant item has
reciprocal rank 0; average precision divides by the total number of
relevant items, so relevant items missing from the ranking contribute
nothing; a query whose relevant set is empty contributes 0 to MRR and
MAP.  Aggregates are arithmetic means over queries.

Leave-one-out trains the ranker per fold on all other queries' feature
vectors and predicts the held-out query; the phrase scorer is trained
once beforehand, never per fold.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .corpus import QueryInstance
from .ranker import (FeatureLookup, RankedList, build_pairs, rank_candidates,
                     select_top_k, train_rank_svm)


class NoRelevant(ValueError):
    """Average precision is undefined without relevant items."""


class EmptyResults(ValueError):
    """Aggregation needs at least one query result."""


class TooFewQueries(ValueError):
    """Leave-one-out needs at least two queries."""


def reciprocal_rank(ranked: RankedList, relevant: set[str]) -> float:
    """1/rank of the first relevant id; 0.0 if none is present."""
    for position, cid in enumerate(ranked.ids(), start=1):
        if cid in relevant:
            return 1.0 / position
    return 0.0


def average_precision(ranked: RankedList, relevant: set[str]) -> float:
    """Mean precision-at-rank over all relevant items (absent ones count 0)."""
    if not relevant:
        raise NoRelevant("relevant set is empty")
    hits = 0
    total = 0.0
    for position, cid in enumerate(ranked.ids(), start=1):
        if cid in relevant:
            hits += 1
            total += hits / position
    return total / len(relevant)


def prf_at_k(predicted: set[str], relevant: set[str]) -> tuple[float, float, float]:
    """Set-overlap precision, recall and F1; zeros on empty denominators."""
    overlap = len(predicted & relevant)
    precision = overlap / len(predicted) if predicted else 0.0
    recall = overlap / len(relevant) if relevant else 0.0
    if precision + recall == 0.0:
        return (precision, recall, 0.0)
    return (precision, recall, 2 * precision * recall / (precision + recall))


@dataclass(frozen=True)
class QueryResult:
    query_id: str
    ranked: RankedList
    relevant: frozenset[str]
    predicted: frozenset[str]

    def __post_init__(self):
        if not self.predicted <= set(self.ranked.ids()):
            raise ValueError("predicted ids must come from the ranking")


@dataclass(frozen=True)
class QueryMetrics:
    query_id: str
    reciprocal_rank: float
    average_precision: float
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class EvalReport:
    mrr: float
    map: float
    precision: float
    recall: float
    f1: float
    per_query: tuple[QueryMetrics, ...]

    def to_json(self) -> dict:
        return {
            "mrr": self.mrr, "map": self.map, "precision": self.precision,
            "recall": self.recall, "f1": self.f1,
            "per_query": [
                {"query_id": q.query_id, "rr": q.reciprocal_rank,
                 "ap": q.average_precision, "precision": q.precision,
                 "recall": q.recall, "f1": q.f1}
                for q in self.per_query
            ],
        }


def evaluate(results: Sequence[QueryResult]) -> EvalReport:
    """Per-query metrics, aggregated by arithmetic mean."""
    if len(results) == 0:
        raise EmptyResults("no query results")
    rows = []
    for res in results:
        relevant = set(res.relevant)
        rr = reciprocal_rank(res.ranked, relevant)
        ap = average_precision(res.ranked, relevant) if relevant else 0.0
        p, r, f1 = prf_at_k(set(res.predicted), relevant)
        rows.append(QueryMetrics(res.query_id, rr, ap, p, r, f1))
    n = len(rows)
    return EvalReport(
        mrr=sum(q.reciprocal_rank for q in rows) / n,
        map=sum(q.average_precision for q in rows) / n,
        precision=sum(q.precision for q in rows) / n,
        recall=sum(q.recall for q in rows) / n,
        f1=sum(q.f1 for q in rows) / n,
        per_query=tuple(rows),
    )


def leave_one_out(instances: Sequence[QueryInstance], features: FeatureLookup,
                  top_k: int = 5, regularization: float = 1.0,
                  epochs: int = 100, seed: int = 0,
                  per_query_cap: int | None = None,
                  standardize: bool = True) -> EvalReport:
    """Hold out each query, train the ranker on the rest, evaluate."""
    if len(instances) < 2:
        raise TooFewQueries(f"{len(instances)} queries, need at least 2")
    results = []
    for held_idx, held in enumerate(instances):
        fold = [inst for i, inst in enumerate(instances) if i != held_idx]
        pairs = build_pairs(fold, features, per_query_cap, seed)
        model = train_rank_svm(pairs, regularization, epochs, seed, standardize)
        ranked = rank_candidates(model, held, features)
        results.append(QueryResult(
            held.query.id, ranked, frozenset(held.noticed_ids),
            frozenset(select_top_k(ranked, top_k))))
    return evaluate(results)


def format_results_table(rows: Sequence[tuple[str, EvalReport]]) -> str:
    """Fixed-width text table: one labeled row per run."""
    header = f"{'Model':<16} {'MRR':>7} {'MAP':>7} {'Prec':>7} {'Rec':>7} {'F1':>7}"
    lines = [header, "-" * len(header)]
    for label, report in rows:
        lines.append(
            f"{label:<16} {report.mrr:>7.3f} {report.map:>7.3f} "
            f"{report.precision:>7.3f} {report.recall:>7.3f} {report.f1:>7.3f}")
    return "\n".join(lines) + "\n"
