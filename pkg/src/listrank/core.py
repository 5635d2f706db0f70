"""Domain types shared by every part of the reranking toolkit.

Positions are 1-based everywhere a user or a model can see them (prompt IDs,
permutations, window spans). Zero-based indexing only happens inside helpers.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Iterable, Iterator, Mapping, Optional, Sequence, Tuple


class ValidationError(ValueError):
    """Raised when a domain object or an input file violates its contract."""


@dataclass(frozen=True)
class Passage:
    doc_id: str
    body: str
    token_estimate: Optional[int] = None

    def __post_init__(self) -> None:
        if not self.doc_id:
            raise ValidationError("passage doc_id must be nonempty")
        if not self.body:
            raise ValidationError(f"passage {self.doc_id!r} has an empty body")
        if self.token_estimate is not None and self.token_estimate < 0:
            raise ValidationError("token_estimate must be nonnegative")


@dataclass(frozen=True)
class Query:
    query_id: str
    body: str

    def __post_init__(self) -> None:
        if not self.query_id or not self.body:
            raise ValidationError("query id and text must both be nonempty")


@dataclass(frozen=True)
class CandidateList:
    """A query plus its retrieved passages, in their current order."""

    query: Query
    passages: Tuple[Passage, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "passages", tuple(self.passages))
        if not self.passages:
            raise ValidationError(f"query {self.query.query_id!r} has no candidates")
        ids = [p.doc_id for p in self.passages]
        if len(set(ids)) != len(ids):
            dup = next(d for d in ids if ids.count(d) > 1)
            raise ValidationError(
                f"query {self.query.query_id!r} lists doc_id {dup!r} more than once"
            )

    def __len__(self) -> int:
        return len(self.passages)

    @property
    def doc_ids(self) -> Tuple[str, ...]:
        return tuple(p.doc_id for p in self.passages)

    def with_passages(self, passages: Iterable[Passage]) -> "CandidateList":
        return CandidateList(self.query, tuple(passages))


@dataclass(frozen=True)
class Permutation:
    """A bijection on 1..n, written as the sequence of source positions."""

    order: Tuple[int, ...]

    def __post_init__(self) -> None:
        order = tuple(self.order)
        object.__setattr__(self, "order", order)
        n = len(order)
        if n == 0:
            raise ValidationError("a permutation needs at least one item")
        if sorted(order) != list(range(1, n + 1)):
            raise ValidationError(f"{list(order)} is not a permutation of 1..{n}")

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(1, n + 1)))

    def __len__(self) -> int:
        return len(self.order)

    def __iter__(self) -> Iterator[int]:
        return iter(self.order)

    def __getitem__(self, i: int) -> int:
        return self.order[i]

    def then(self, inner: "Permutation") -> "Permutation":
        """Permutation equivalent to applying ``self`` and then ``inner``.

        ``apply(apply(x, self), inner) == apply(x, self.then(inner))``.
        """
        if len(inner) != len(self):
            raise ValidationError("cannot compose permutations of different length")
        return Permutation(tuple(self.order[j - 1] for j in inner.order))

    def is_identity(self) -> bool:
        return all(v == i for i, v in enumerate(self.order, start=1))


@dataclass(frozen=True)
class PartialRanking:
    """Distinct 1-based positions listed by a model, possibly fewer than n."""

    listed: Tuple[int, ...]
    n: int

    def __post_init__(self) -> None:
        listed = tuple(self.listed)
        object.__setattr__(self, "listed", listed)
        if self.n < 1:
            raise ValidationError("n must be at least 1")
        if len(set(listed)) != len(listed):
            raise ValidationError("partial ranking repeats a position")
        if any(not 1 <= v <= self.n for v in listed):
            raise ValidationError(f"partial ranking has positions outside 1..{self.n}")

    def completed(self) -> Permutation:
        """Fill unlisted positions behind the listed ones, keeping their order."""
        seen = set(self.listed)
        rest = [i for i in range(1, self.n + 1) if i not in seen]
        return Permutation(self.listed + tuple(rest))


@dataclass(frozen=True)
class Perturbation:
    kind: str = "none"
    seed: Optional[int] = None

    KINDS = ("none", "shuffle", "reverse")

    def __post_init__(self) -> None:
        if self.kind not in self.KINDS:
            raise ValidationError(f"unknown perturbation {self.kind!r}")
        if self.kind == "shuffle" and self.seed is None:
            raise ValidationError("shuffle perturbation needs an explicit seed")

    @classmethod
    def parse(cls, text: str) -> "Perturbation":
        """Parse ``none``, ``reverse`` or ``shuffle:SEED``."""
        kind, _, seed = text.strip().partition(":")
        if kind == "shuffle":
            try:
                return cls("shuffle", int(seed))
            except ValueError:
                raise ValidationError(f"bad shuffle seed in {text!r}") from None
        if seed:
            raise ValidationError(f"{kind!r} takes no argument")
        return cls(kind)

    def __str__(self) -> str:
        return f"shuffle:{self.seed}" if self.kind == "shuffle" else self.kind


@dataclass(frozen=True)
class WindowConfig:
    window_size: int = 20
    step: int = 10
    top_k_output: Optional[int] = None
    perturbation: Perturbation = field(default_factory=Perturbation)

    def __post_init__(self) -> None:
        if not 1 <= self.step <= self.window_size:
            raise ValidationError(
                f"need 1 <= step <= window (got step={self.step}, window={self.window_size})"
            )
        k = self.top_k_output
        if k is not None and not 1 <= k <= self.window_size:
            raise ValidationError(f"top_k_output={k} must lie in 1..{self.window_size}")


class Qrels:
    """Graded judgments; unjudged (query, doc) pairs have relevance 0."""

    def __init__(self, judgments: Mapping[str, Mapping[str, int]] | None = None):
        self._by_query: dict[str, dict[str, int]] = {}
        for qid, docs in (judgments or {}).items():
            for doc_id, rel in docs.items():
                self.add(qid, doc_id, rel)

    def add(self, query_id: str, doc_id: str, relevance: int) -> None:
        if relevance < 0:
            raise ValidationError(
                f"negative relevance {relevance} for ({query_id}, {doc_id})"
            )
        self._by_query.setdefault(query_id, {})[doc_id] = int(relevance)

    def for_query(self, query_id: str) -> dict[str, int]:
        return dict(self._by_query.get(query_id, {}))

    def relevance(self, query_id: str, doc_id: str) -> int:
        return self._by_query.get(query_id, {}).get(doc_id, 0)

    @property
    def query_ids(self) -> list[str]:
        return sorted(self._by_query)

    def __contains__(self, query_id: object) -> bool:
        return query_id in self._by_query


@dataclass(frozen=True)
class PriceSheet:
    model_name: str
    input_price_per_1k: Decimal
    output_price_per_1k: Decimal

    def __post_init__(self) -> None:
        for name in ("input_price_per_1k", "output_price_per_1k"):
            value = Decimal(str(getattr(self, name)))
            if value < 0:
                raise ValidationError(f"{name} must be nonnegative")
            object.__setattr__(self, name, value)


# Appendix-style price table for the two proprietary teachers.
GPT_4O_MINI = PriceSheet("gpt-4o-mini-2024-07-18", Decimal("0.00015"), Decimal("0.00060"))
GPT_4O = PriceSheet("gpt-4o-2024-08-06", Decimal("0.0025"), Decimal("0.0100"))
DEFAULT_PRICES = {p.model_name: p for p in (GPT_4O_MINI, GPT_4O)}


@dataclass(frozen=True)
class UsageRecord:
    """One backend call: tokens, latency in seconds, and the window it covered."""

    query_id: str
    input_tokens: int
    output_tokens: int
    latency: float
    window_span: Tuple[int, int]
    pass_index: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "window_span", tuple(self.window_span))
        if self.input_tokens < 0 or self.output_tokens < 0:
            raise ValidationError("token counts must be nonnegative")
        if self.latency < 0:
            raise ValidationError("latency must be nonnegative")
        start, end = self.window_span
        if not 1 <= start <= end:
            raise ValidationError(f"bad window span {self.window_span}")

    @property
    def passages(self) -> int:
        start, end = self.window_span
        return end - start + 1


def apply_permutation(candidates: CandidateList, perm: Permutation) -> CandidateList:
    """Output position i holds the input passage at position ``perm[i]``."""
    if len(perm) != len(candidates):
        raise ValidationError(
            f"permutation of length {len(perm)} applied to {len(candidates)} candidates"
        )
    return candidates.with_passages(candidates.passages[j - 1] for j in perm)


def perturbation_permutation(n: int, perturbation: Perturbation) -> Permutation:
    if perturbation.kind == "reverse":
        return Permutation(tuple(range(n, 0, -1)))
    if perturbation.kind == "shuffle":
        order = list(range(1, n + 1))
        random.Random(perturbation.seed).shuffle(order)
        return Permutation(tuple(order))
    return Permutation.identity(n)


def perturb_order(candidates: CandidateList, perturbation: Perturbation) -> CandidateList:
    return apply_permutation(
        candidates, perturbation_permutation(len(candidates), perturbation)
    )


def as_permutation(values: Sequence[int]) -> Permutation:
    return Permutation(tuple(int(v) for v in values))
