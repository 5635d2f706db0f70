"""Seeded fault injection for exercising the parser and the schedulers."""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Optional, Union

from ..core import ValidationError
from ..parsing import extract_ids
from .base import Backend, RankRequest, RankResponse

_OPENERS = (
    "Sure! Here is the ranking:",
    "Based on relevance, the order is",
    "Ranking results:",
    "I think the best order would be",
)
_CLOSERS = ("", "Hope this helps.", "Let me know if you need an explanation.", "(end)")
_SEPARATORS = (" > ", ", ", "\n", ">", " >> ", " ")


@dataclass(frozen=True)
class FaultSpec:
    """Per-response probability of each fault class."""

    duplicate: float = 0.0
    drop: float = 0.0
    out_of_range: float = 0.0
    prose: float = 0.0
    empty: float = 0.0

    def __post_init__(self) -> None:
        for name in ("duplicate", "drop", "out_of_range", "prose", "empty"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise ValidationError(f"fault rate {name}={rate} outside [0, 1]")

    @classmethod
    def uniform(cls, rate: float) -> "FaultSpec":
        return cls(rate, rate, rate, rate, rate)


def corrupt(
    response: RankResponse,
    spec: FaultSpec,
    seed: Union[int, str],
    m: Optional[int] = None,
) -> RankResponse:
    """Return ``response`` with seeded faults applied to its text.

    ``m`` is the window size used to pick out-of-range IDs; without it the
    largest ID in the text stands in.
    """
    rng = random.Random(seed)
    # Draw every coin up front so each fault's outcome is independent of the others.
    hits = {name: rng.random() < getattr(spec, name) for name in
            ("duplicate", "drop", "out_of_range", "prose", "empty")}
    if not any(hits.values()):
        return response
    if hits["empty"]:
        return replace(response, raw_text="")

    ids = extract_ids(response.raw_text)
    size = m or max(ids, default=1)
    if hits["drop"] and ids:
        del ids[rng.randrange(len(ids))]
    if hits["duplicate"] and ids:
        ids.insert(rng.randrange(len(ids) + 1), rng.choice(ids))
    if hits["out_of_range"]:
        bad = rng.choice((0, size + rng.randint(1, max(size, 1))))
        ids.insert(rng.randrange(len(ids) + 1), bad)

    if hits["prose"]:
        sep = rng.choice(_SEPARATORS)
        body = sep.join(f"[{i}]" for i in ids)
        text = f"{rng.choice(_OPENERS)}\n{body}\n{rng.choice(_CLOSERS)}".strip()
    else:
        text = " > ".join(f"[{i}]" for i in ids)
    return replace(response, raw_text=text)


class NoisyBackend:
    """Wraps another backend and corrupts its responses reproducibly.

    The corruption seed mixes ``seed`` with the request's content hash, so the
    same request always gets the same faults regardless of call order.
    """

    def __init__(self, inner: Backend, spec: FaultSpec, seed: int = 0):
        self.inner = inner
        self.spec = spec
        self.seed = seed

    def rank_window(self, request: RankRequest) -> RankResponse:
        response = self.inner.rank_window(request)
        m = len(request.doc_ids) or None
        return corrupt(response, self.spec, f"{self.seed}:{request.key()}", m)
