"""NDCG@k with TREC conventions: exponential gain, log2(rank + 1) discount."""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import fmean
from typing import Dict, List, Mapping, Sequence, Tuple

from .core import Qrels, ValidationError

GAINS = {
    "exp": lambda rel: (1 << rel) - 1 if rel > 0 else 0,
    "linear": lambda rel: rel,
}


def dcg(gains: Sequence[float]) -> float:
    return math.fsum(g / math.log2(i + 1) for i, g in enumerate(gains, start=1))


def ndcg_at_k(
    ranking: Sequence[str], judged: Mapping[str, int], k: int = 10, gain: str = "exp"
) -> float:
    """NDCG of ``ranking`` cut at ``k``; 0.0 when nothing is relevant.

    Unjudged documents contribute zero gain. The ideal DCG is computed over
    every judged document for the query, not only the retrieved ones.
    """
    if k < 1:
        raise ValidationError("k must be at least 1")
    if not ranking:
        raise ValidationError("cannot evaluate an empty ranking")
    if len(set(ranking)) != len(ranking):
        raise ValidationError("ranking lists a document twice")
    g = GAINS[gain]
    actual = dcg([g(judged.get(d, 0)) for d in ranking[:k]])
    ideal = dcg(sorted((g(r) for r in judged.values()), reverse=True)[:k])
    if ideal == 0:
        return 0.0
    return actual / ideal


@dataclass(frozen=True)
class QueryScore:
    query_id: str
    ndcg: float
    has_relevant: bool


def evaluate_run(
    run: Mapping[str, Sequence[str]], qrels: Qrels, k: int = 10, gain: str = "exp"
) -> List[QueryScore]:
    """Score every query of ``run``; queries without any relevant doc are flagged."""
    out = []
    for qid, ranking in run.items():
        judged = qrels.for_query(qid)
        relevant = any(r > 0 for r in judged.values())
        out.append(QueryScore(qid, ndcg_at_k(ranking, judged, k, gain), relevant))
    return sorted(out, key=lambda s: s.query_id)


def aggregate(values: Mapping[str, float]) -> Tuple[float, List[Tuple[str, float]]]:
    if not values:
        raise ValidationError("nothing to aggregate")
    table = sorted(values.items())
    return fmean(v for _, v in table), table


def format_table(scores: Sequence[QueryScore], k: int) -> str:
    mean, _ = aggregate({s.query_id: s.ndcg for s in scores})
    width = max([len("query")] + [len(s.query_id) for s in scores])
    lines = [f"{'query':<{width}}  ndcg@{k}"]
    for s in scores:
        flag = "" if s.has_relevant else "  (no relevant docs)"
        lines.append(f"{s.query_id:<{width}}  {s.ndcg:.4f}{flag}")
    lines.append(f"{'mean':<{width}}  {mean:.4f}")
    return "\n".join(lines)


def per_query(scores: Sequence[QueryScore]) -> Dict[str, float]:
    return {s.query_id: s.ndcg for s in scores}
