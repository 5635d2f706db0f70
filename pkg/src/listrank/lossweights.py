"""Rank-aware token weights for distillation labels.

A label such as ``[3] > [1] > [2]`` is split into character spans: each
bracketed ID is a passage span whose weight is ``1 + 1/log2(p + 1)`` for its
label rank ``p``, and everything between IDs is a separator span weighted
``alpha``. Trainers project their own token offsets onto these spans.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .core import CandidateList, Permutation, ValidationError
from .parsing import serialize_ranking
from .prompting import HEURISTIC, PromptTemplate, TokenizerHandle, build_prompt

PASSAGE_ID = "passage_id"
SEPARATOR = "separator"


class AlignmentError(ValueError):
    pass


def rank_weight(p: int) -> float:
    if p < 1:
        raise ValidationError(f"rank must be >= 1, got {p}")
    return 1.0 + 1.0 / math.log2(p + 1)


@dataclass(frozen=True)
class LabelSpan:
    start: int
    end: int
    kind: str
    rank: Optional[int] = None

    def __post_init__(self) -> None:
        if not 0 <= self.start < self.end:
            raise ValidationError(f"bad span [{self.start}, {self.end})")
        if self.kind == PASSAGE_ID and (self.rank is None or self.rank < 1):
            raise ValidationError("passage spans need a rank >= 1")
        if self.kind not in (PASSAGE_ID, SEPARATOR):
            raise ValidationError(f"unknown span kind {self.kind!r}")


@dataclass(frozen=True)
class WeightedLabel:
    text: str
    spans: Tuple[LabelSpan, ...]
    alpha: float = 1.0
    weights: Tuple[float, ...] = field(init=False)

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha <= 1.0:
            raise ValidationError(f"alpha must lie in (0, 1], got {self.alpha}")
        object.__setattr__(self, "spans", tuple(self.spans))
        object.__setattr__(self, "weights", tuple(weight_vector(self)))


def serialize_label(perm: Sequence[int]) -> str:
    """``[a] > [b] > ...``; accepts a :class:`Permutation` or any ID sequence."""
    return serialize_ranking(perm)


def label_spans(perm: Sequence[int]) -> Tuple[LabelSpan, ...]:
    if any(int(i) < 1 for i in perm):
        raise ValidationError("label IDs must be positive")
    spans: List[LabelSpan] = []
    cursor = 0
    for rank, position in enumerate(perm, start=1):
        if rank > 1:
            spans.append(LabelSpan(cursor, cursor + 3, SEPARATOR))
            cursor += 3
        width = len(str(position)) + 2
        spans.append(LabelSpan(cursor, cursor + width, PASSAGE_ID, rank))
        cursor += width
    return tuple(spans)


def weighted_label(perm: Sequence[int], alpha: float = 1.0) -> WeightedLabel:
    return WeightedLabel(serialize_label(perm), label_spans(perm), alpha)


def weight_vector(label: WeightedLabel) -> List[float]:
    return [
        rank_weight(s.rank) if s.kind == PASSAGE_ID else label.alpha for s in label.spans
    ]


def token_weights(label: WeightedLabel, token_ranges: Sequence[Tuple[int, int]]) -> List[float]:
    """Weight of each token = weight of the span holding its first character."""
    starts = [s.start for s in label.spans]
    out = []
    n = len(label.text)
    for start, end in token_ranges:
        if not 0 <= start < end <= n:
            raise AlignmentError(f"token range [{start}, {end}) outside label of length {n}")
        idx = _span_index(starts, start)
        span = label.spans[idx]
        if not span.start <= start < span.end:
            raise AlignmentError(f"character {start} is not covered by any span")
        out.append(label.weights[idx])
    return out


def _span_index(starts: Sequence[int], pos: int) -> int:
    return max(bisect_right(starts, pos) - 1, 0)


@dataclass(frozen=True)
class TokenLogProbs:
    """Per-token log-probabilities, optionally with label character ranges."""

    logprobs: Tuple[float, ...]
    ranges: Optional[Tuple[Tuple[int, int], ...]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "logprobs", tuple(float(x) for x in self.logprobs))
        if any(x > 0 or math.isnan(x) for x in self.logprobs):
            raise ValidationError("log-probabilities must be <= 0")
        if self.ranges is not None:
            ranges = tuple((int(a), int(b)) for a, b in self.ranges)
            object.__setattr__(self, "ranges", ranges)
            if len(ranges) != len(self.logprobs):
                raise AlignmentError("one character range per token is required")
            for (a0, b0), (a1, _) in zip(ranges, ranges[1:]):
                if a1 < b0 or a1 < a0:
                    raise AlignmentError("token ranges must be ordered and disjoint")

    def __len__(self) -> int:
        return len(self.logprobs)


def standard_loss(lp: TokenLogProbs) -> float:
    return -math.fsum(lp.logprobs)


def importance_loss(lp: TokenLogProbs, weights: Sequence[float]) -> float:
    if len(weights) != len(lp):
        raise AlignmentError(f"{len(weights)} weights for {len(lp)} tokens")
    return -math.fsum(w * x for w, x in zip(weights, lp.logprobs))


def label_loss(label: WeightedLabel, lp: TokenLogProbs) -> float:
    """Importance-aware loss with weights projected through ``lp.ranges``."""
    if lp.ranges is None:
        raise AlignmentError("token character ranges are needed to project span weights")
    return importance_loss(lp, token_weights(label, lp.ranges))


@dataclass(frozen=True)
class TrainingRecord:
    prompt: str
    label: str
    spans: Tuple[Dict[str, Any], ...]
    alpha: float
    meta: Dict[str, Any]

    def to_json(self) -> str:
        row = {
            "prompt": self.prompt,
            "label": self.label,
            "spans": list(self.spans),
            "alpha": self.alpha,
            "meta": self.meta,
        }
        return json.dumps(row, ensure_ascii=False, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "TrainingRecord":
        row = json.loads(line)
        return cls(row["prompt"], row["label"], tuple(row["spans"]), row["alpha"], row["meta"])


def emit_training_example(
    candidates: CandidateList,
    label_perm: Permutation,
    alpha: float = 1.0,
    tokenizer: TokenizerHandle = HEURISTIC,
    *,
    template: Optional[PromptTemplate] = None,
    teacher: str = "",
    strategy: str = "",
    seed: Optional[int] = None,
) -> TrainingRecord:
    if len(label_perm) != len(candidates):
        raise ValidationError(
            f"label covers {len(label_perm)} passages but the prompt has {len(candidates)}"
        )
    prompt = build_prompt(candidates.query, candidates.passages, template)
    label = weighted_label(label_perm, alpha)
    spans = tuple(
        {"start": s.start, "end": s.end, "kind": s.kind, "rank": s.rank, "weight": w}
        for s, w in zip(label.spans, label.weights)
    )
    meta = {
        "teacher": teacher,
        "strategy": strategy,
        "seed": seed,
        "query_id": candidates.query.query_id,
        "doc_ids": list(candidates.doc_ids),
        "prompt_tokens": tokenizer(prompt),
        "label_tokens": tokenizer(label.text),
    }
    return TrainingRecord(prompt, label.text, spans, alpha, meta)
