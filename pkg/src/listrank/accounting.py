"""Token, latency and cost reports comparing ranking strategies."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from decimal import Decimal
from typing import Dict, Iterable, List, Mapping, Optional, Sequence

from .core import PriceSheet, UsageRecord, ValidationError

THOUSAND = Decimal(1000)


def cost(usage: Iterable[UsageRecord], prices: PriceSheet) -> Decimal:
    n_in = n_out = 0
    for u in usage:
        n_in += u.input_tokens
        n_out += u.output_tokens
    return (
        Decimal(n_in) / THOUSAND * prices.input_price_per_1k
        + Decimal(n_out) / THOUSAND * prices.output_price_per_1k
    )


@dataclass(frozen=True)
class StrategySummary:
    strategy: str
    queries: int
    calls: float
    passage_evaluations: float
    redundancy: float
    input_tokens: float
    output_tokens: float
    latency: float
    cost: Decimal
    total_cost: Decimal


def _by_query(usage: Iterable[UsageRecord]) -> Dict[str, List[UsageRecord]]:
    grouped: Dict[str, List[UsageRecord]] = defaultdict(list)
    for u in usage:
        grouped[u.query_id].append(u)
    return grouped


def summarize(strategy: str, usage: Iterable[UsageRecord], prices: PriceSheet) -> StrategySummary:
    """Per-query means for one strategy.

    Latency is the sum of call latencies within a query, since windows of one
    query run one after another. Redundancy is passage slots sent divided by
    the distinct positions covered.
    """
    grouped = _by_query(usage)
    if not grouped:
        raise ValidationError(f"no usage recorded for strategy {strategy!r}")
    q = len(grouped)
    records = [u for rows in grouped.values() for u in rows]
    evals = sum(u.passages for u in records)
    distinct = sum(max(u.window_span[1] for u in rows) for rows in grouped.values())
    total = cost(records, prices)
    return StrategySummary(
        strategy=strategy,
        queries=q,
        calls=len(records) / q,
        passage_evaluations=evals / q,
        redundancy=evals / distinct,
        input_tokens=sum(u.input_tokens for u in records) / q,
        output_tokens=sum(u.output_tokens for u in records) / q,
        latency=math.fsum(math.fsum(u.latency for u in rows) for rows in grouped.values()) / q,
        cost=total / q,
        total_cost=total,
    )


@dataclass(frozen=True)
class StrategyReport:
    summaries: Dict[str, StrategySummary]
    ratios: Dict[str, float]

    def format(self) -> str:
        cols = ("queries", "calls", "passage_evaluations", "redundancy",
                "input_tokens", "output_tokens", "latency", "cost")
        header = ["strategy", *cols]
        rows = [header]
        for s in self.summaries.values():
            rows.append([
                s.strategy, str(s.queries), f"{s.calls:.2f}", f"{s.passage_evaluations:.1f}",
                f"{s.redundancy:.3f}", f"{s.input_tokens:.1f}", f"{s.output_tokens:.1f}",
                f"{s.latency:.3f}", f"{s.cost:.6f}",
            ])
        widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
        lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
        for name, value in self.ratios.items():
            lines.append(f"{name}: {value:.4f}")
        return "\n".join(lines)


def strategy_report(
    usage_by_strategy: Mapping[str, Sequence[UsageRecord]],
    prices: PriceSheet,
    baseline: str = "sliding",
    candidate: str = "full",
) -> StrategyReport:
    """Summaries per strategy plus ``candidate / baseline`` ratios when both exist."""
    query_sets = {name: set(_by_query(rows)) for name, rows in usage_by_strategy.items()}
    reference: Optional[set] = None
    for name, qs in query_sets.items():
        if reference is None:
            reference = qs
        elif qs != reference:
            raise ValidationError(f"strategy {name!r} covers a different set of queries")
    summaries = {
        name: summarize(name, rows, prices) for name, rows in usage_by_strategy.items()
    }
    ratios: Dict[str, float] = {}
    if baseline in summaries and candidate in summaries:
        a, b = summaries[candidate], summaries[baseline]
        for field in ("calls", "passage_evaluations", "input_tokens", "output_tokens", "latency"):
            denom = getattr(b, field)
            if denom:
                ratios[f"{candidate}/{baseline} {field}"] = getattr(a, field) / denom
        if b.cost:
            ratios[f"{candidate}/{baseline} cost"] = float(a.cost / b.cost)
    return StrategyReport(summaries, ratios)
