"""Full ranking, single-pass sliding window, and multi-pass label construction.

Each strategy works on the candidate list after the configured perturbation and
reports ``final_order`` as a permutation over the candidates as passed in.
Window calls inside one query are strictly sequential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .backends.base import Backend, BackendError, RankRequest
from .core import (
    CandidateList,
    PartialRanking,
    Passage,
    Permutation,
    Perturbation,
    UsageRecord,
    ValidationError,
    WindowConfig,
    perturb_order,
)
from .parsing import DEFAULT_POLICY, ParseError, ParseReport, RepairPolicy, parse_ranking
from .prompting import PromptTemplate, build_prompt


class ConfigError(ValidationError):
    pass


class StrategyError(RuntimeError):
    """A backend call failed for good; ``usage`` holds the calls made so far."""

    def __init__(self, message: str, usage: Tuple[UsageRecord, ...] = ()):
        super().__init__(message)
        self.usage = usage


@dataclass(frozen=True)
class StrategyOutcome:
    strategy: str
    final_order: Permutation
    usage: Tuple[UsageRecord, ...]
    reports: Tuple[ParseReport, ...]
    passes: int = 1
    perturbation: Perturbation = Perturbation()

    @property
    def calls(self) -> int:
        return len(self.usage)

    @property
    def passage_evaluations(self) -> int:
        return sum(u.passages for u in self.usage)

    def reranked(self, candidates: CandidateList) -> CandidateList:
        return candidates.with_passages(candidates.passages[j - 1] for j in self.final_order)


def window_spans(n: int, window: int, step: int) -> List[Tuple[int, int]]:
    """1-based inclusive spans visited by one back-to-front sliding pass."""
    if n <= window:
        return [(1, n)]
    count = math.ceil((n - window) / step) + 1
    spans = []
    for j in range(count):
        start = max(1, n - window + 1 - j * step)
        spans.append((start, start + window - 1))
    return spans


def sliding_call_count(n: int, window: int, step: int) -> int:
    return 1 if n <= window else math.ceil((n - window) / step) + 1


class _Run:
    """Mutable state for one query: the working order plus its call ledger."""

    def __init__(
        self,
        candidates: CandidateList,
        backend: Backend,
        cfg: WindowConfig,
        template: Optional[PromptTemplate],
        model_name: str,
        policy: RepairPolicy,
    ):
        self.original = candidates
        self.query = candidates.query
        self.items: List[Passage] = list(perturb_order(candidates, cfg.perturbation).passages)
        self.backend = backend
        self.cfg = cfg
        self.template = template
        self.model_name = model_name
        self.policy = policy
        self.usage: List[UsageRecord] = []
        self.reports: List[ParseReport] = []

    def rank(self, items: Sequence[Passage], start: int, pass_index: int) -> List[Passage]:
        """Rank one window whose first passage sits at global position ``start``."""
        m = len(items)
        k = self.cfg.top_k_output
        max_ids = k if k is not None and k < m else None
        request = RankRequest(
            prompt=build_prompt(self.query, items, self.template),
            max_output_ids=max_ids,
            model_name=self.model_name,
            doc_ids=tuple(p.doc_id for p in items),
        )
        try:
            response = self.backend.rank_window(request)
        except BackendError as exc:
            raise StrategyError(
                f"query {self.query.query_id}: {exc}", tuple(self.usage)
            ) from exc
        self.usage.append(
            UsageRecord(
                query_id=self.query.query_id,
                input_tokens=response.input_tokens,
                output_tokens=response.output_tokens,
                latency=response.latency,
                window_span=(start, start + m - 1),
                pass_index=pass_index,
            )
        )
        if m == 1:
            self.reports.append(ParseReport())
            return list(items)
        if max_ids is not None:
            perm, report = self._parse_truncated(response.raw_text, m, max_ids)
        else:
            try:
                perm, report = parse_ranking(response.raw_text, m, self.policy)
            except ParseError:
                perm, report = Permutation.identity(m), ParseReport(
                    repaired=True, missing_appended=m, fallback=True
                )
        self.reports.append(report)
        return [items[j - 1] for j in perm]

    def _parse_truncated(self, raw: str, m: int, max_ids: int):
        partial, rep = parse_ranking(raw, m, self.policy, mode="partial")
        listed = partial.listed[:max_ids]
        perm = PartialRanking(listed, m).completed()
        report = ParseReport(
            repaired=rep.repaired or len(listed) < max_ids,
            duplicates_removed=rep.duplicates_removed,
            out_of_range_dropped=rep.out_of_range_dropped,
            missing_appended=m - len(listed),
            fallback=not listed,
        )
        return perm, report

    def slide(self, items: List[Passage], offset: int, pass_index: int) -> List[Passage]:
        items = list(items)
        w, s = self.cfg.window_size, self.cfg.step
        for start, end in window_spans(len(items), w, s):
            end = min(end, len(items))
            items[start - 1 : end] = self.rank(items[start - 1 : end], offset + start, pass_index)
        return items

    def outcome(self, strategy: str, items: Sequence[Passage], passes: int) -> StrategyOutcome:
        position = {p.doc_id: i for i, p in enumerate(self.original.passages, start=1)}
        order = Permutation(tuple(position[p.doc_id] for p in items))
        return StrategyOutcome(
            strategy=strategy,
            final_order=order,
            usage=tuple(self.usage),
            reports=tuple(self.reports),
            passes=passes,
            perturbation=self.cfg.perturbation,
        )


def _check_sliding(cfg: WindowConfig) -> None:
    k = cfg.top_k_output
    if k is not None and k < cfg.step:
        raise ConfigError(
            f"top_k_output={k} is smaller than step={cfg.step}; sliding needs k >= step"
        )


def full_rank(
    candidates: CandidateList,
    backend: Backend,
    cfg: WindowConfig = WindowConfig(),
    *,
    template: Optional[PromptTemplate] = None,
    model_name: str = "",
    policy: RepairPolicy = DEFAULT_POLICY,
) -> StrategyOutcome:
    """Rank every candidate in a single call."""
    run = _Run(candidates, backend, cfg, template, model_name, policy)
    items = run.rank(run.items, 1, 1)
    return run.outcome("full", items, 1)


def sliding_window_pass(
    candidates: CandidateList,
    backend: Backend,
    cfg: WindowConfig = WindowConfig(),
    *,
    template: Optional[PromptTemplate] = None,
    model_name: str = "",
    policy: RepairPolicy = DEFAULT_POLICY,
) -> StrategyOutcome:
    """One back-to-front pass of overlapping windows."""
    _check_sliding(cfg)
    run = _Run(candidates, backend, cfg, template, model_name, policy)
    items = run.slide(run.items, 0, 1)
    return run.outcome("sliding", items, 1)


def fixed_per_pass(cfg: WindowConfig) -> int:
    """How many leading results one sliding pass is guaranteed to place."""
    seg = cfg.window_size - cfg.step
    if cfg.top_k_output is not None:
        seg = min(seg, cfg.top_k_output)
    return seg


def multi_pass_label(
    candidates: CandidateList,
    backend: Backend,
    cfg: WindowConfig = WindowConfig(),
    *,
    template: Optional[PromptTemplate] = None,
    model_name: str = "",
    policy: RepairPolicy = DEFAULT_POLICY,
) -> StrategyOutcome:
    """Build a complete ranking by repeated sliding passes.

    Each pass freezes its guaranteed leading segment and the next pass only
    sees what is left. Once at most one window's worth remains, a single call
    ranks the rest.
    """
    _check_sliding(cfg)
    seg = fixed_per_pass(cfg)
    run = _Run(candidates, backend, cfg, template, model_name, policy)
    if seg < 1 and len(run.items) > cfg.window_size:
        raise ConfigError("multi-pass labelling needs step < window")
    fixed: List[Passage] = []
    remaining = run.items
    pass_index = 1
    while True:
        offset = len(fixed)
        if len(remaining) <= cfg.window_size:
            fixed.extend(run.rank(remaining, offset + 1, pass_index))
            break
        remaining = run.slide(remaining, offset, pass_index)
        fixed.extend(remaining[:seg])
        remaining = remaining[seg:]
        pass_index += 1
    return run.outcome("multipass", fixed, pass_index)


STRATEGIES = {
    "full": full_rank,
    "sliding": sliding_window_pass,
    "multipass": multi_pass_label,
}


def run_strategy(name: str, candidates: CandidateList, backend: Backend, cfg: WindowConfig, **kw):
    try:
        fn = STRATEGIES[name]
    except KeyError:
        raise ConfigError(f"unknown strategy {name!r}") from None
    return fn(candidates, backend, cfg, **kw)
