"""Listwise passage reranking with sliding-window and full-ranking strategies."""

from .core import (
    CandidateList,
    PartialRanking,
    Passage,
    Permutation,
    Perturbation,
    PriceSheet,
    Qrels,
    Query,
    UsageRecord,
    ValidationError,
    WindowConfig,
    apply_permutation,
    perturb_order,
)
from .scheduler import (
    StrategyError,
    StrategyOutcome,
    full_rank,
    multi_pass_label,
    sliding_window_pass,
)

__version__ = "0.1.0"

__all__ = [
    "CandidateList",
    "PartialRanking",
    "Passage",
    "Permutation",
    "Perturbation",
    "PriceSheet",
    "Qrels",
    "Query",
    "StrategyError",
    "StrategyOutcome",
    "UsageRecord",
    "ValidationError",
    "WindowConfig",
    "apply_permutation",
    "full_rank",
    "multi_pass_label",
    "perturb_order",
    "sliding_window_pass",
]
