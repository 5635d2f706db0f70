from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from ..parsing import serialize_ranking
from ..prompting import HEURISTIC, TokenizerHandle
from .base import BackendError, RankRequest, RankResponse


@dataclass(frozen=True)
class LatencyModel:
    """Synthetic call latency: fixed cost plus per-token costs, in seconds."""

    per_call: float = 0.0
    per_input_token: float = 0.0
    per_output_token: float = 0.0

    def __call__(self, input_tokens: int, output_tokens: int) -> float:
        return (
            self.per_call
            + self.per_input_token * input_tokens
            + self.per_output_token * output_tokens
        )


class OracleBackend:
    """Ranks each window by hidden scores, highest first.

    Ties fall back to the order in which ``scores`` lists the documents, so the
    result never depends on how the window happened to be arranged.
    """

    def __init__(
        self,
        scores: Mapping[str, float],
        tokenizer: TokenizerHandle = HEURISTIC,
        latency: Optional[LatencyModel] = None,
    ):
        self.scores = dict(scores)
        self._tie = {doc_id: i for i, doc_id in enumerate(scores)}
        self.tokenizer = tokenizer
        self.latency = latency or LatencyModel()

    def order(self, doc_ids) -> list[int]:
        missing = [d for d in doc_ids if d not in self.scores]
        if missing:
            raise BackendError(f"oracle has no hidden score for {missing[0]!r}")
        positions = range(1, len(doc_ids) + 1)
        return sorted(
            positions,
            key=lambda i: (-self.scores[doc_ids[i - 1]], self._tie[doc_ids[i - 1]]),
        )

    def rank_window(self, request: RankRequest) -> RankResponse:
        if not request.doc_ids:
            raise BackendError("oracle backend needs the window's doc_ids")
        order = self.order(request.doc_ids)
        if request.max_output_ids is not None:
            order = order[: request.max_output_ids]
        text = serialize_ranking(order)
        n_in = self.tokenizer(request.prompt)
        n_out = self.tokenizer(text)
        return RankResponse(text, n_in, n_out, self.latency(n_in, n_out))
