from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional, Protocol, Tuple

from ..core import ValidationError


class BackendError(RuntimeError):
    """A ranking call failed and will not be retried further."""


class TransportError(BackendError):
    pass


class RateLimitError(BackendError):
    pass


class BackendTimeout(BackendError):
    pass


class ReplayMiss(BackendError):
    """Strict replay found no transcript entry for a request."""


@dataclass(frozen=True)
class RankRequest:
    """One listwise call.

    ``doc_ids`` names the window's passages in prompt order. It is context for
    simulated backends only and is not part of the cache key.
    """

    prompt: str
    max_output_ids: Optional[int] = None
    model_name: str = ""
    doc_ids: Tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        if not self.prompt:
            raise ValidationError("rank request prompt must be nonempty")
        if self.max_output_ids is not None and self.max_output_ids < 1:
            raise ValidationError("max_output_ids must be positive")
        object.__setattr__(self, "doc_ids", tuple(self.doc_ids))

    def key(self) -> str:
        payload = json.dumps(
            [self.prompt, self.max_output_ids, self.model_name],
            ensure_ascii=False,
            separators=(",", ":"),
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class RankResponse:
    raw_text: str
    input_tokens: int
    output_tokens: int
    latency: float = 0.0

    def __post_init__(self) -> None:
        if self.input_tokens < 0 or self.output_tokens < 0:
            raise ValidationError("token counts must be nonnegative")


class Backend(Protocol):
    def rank_window(self, request: RankRequest) -> RankResponse: ...
