"""Turn raw model output into a validated ranking, repairing what it must."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Tuple, Union

from .core import PartialRanking, Permutation, ValidationError

BRACKETED = re.compile(r"\[\s*(\d+)\s*\]")

APPEND = "append"
LEAVE_PARTIAL = "leave-partial"


class ParseError(ValueError):
    """No usable identifier in the output; the caller retries or falls back."""


@dataclass(frozen=True)
class RepairPolicy:
    """How malformed output is repaired.

    Duplicates are always keep-first, out-of-range IDs are always dropped and
    anything outside ``[n]`` tokens is ignored. ``missing`` controls whether
    unlisted IDs are appended in their window order. ``on_empty`` decides
    what a full-mode parse does when nothing usable was emitted: ``fail``
    raises :class:`ParseError`, ``identity`` returns the window unchanged.
    """

    missing: str = APPEND
    on_empty: str = "fail"

    def __post_init__(self) -> None:
        if self.missing not in (APPEND, LEAVE_PARTIAL):
            raise ValidationError(f"unknown missing-ID policy {self.missing!r}")
        if self.on_empty not in ("fail", "identity"):
            raise ValidationError(f"unknown on_empty policy {self.on_empty!r}")


DEFAULT_POLICY = RepairPolicy()


@dataclass(frozen=True)
class ParseReport:
    repaired: bool = False
    duplicates_removed: int = 0
    out_of_range_dropped: int = 0
    missing_appended: int = 0
    fallback: bool = False


def extract_ids(raw: str) -> list[int]:
    return [int(tok) for tok in BRACKETED.findall(raw)]


def parse_ranking(
    raw: str, m: int, policy: RepairPolicy = DEFAULT_POLICY, mode: str = "full"
) -> Tuple[Union[Permutation, PartialRanking], ParseReport]:
    """Parse ``[i] > [j] > ...`` output for a window of ``m`` passages.

    ``mode="full"`` always returns a :class:`Permutation` over 1..m;
    ``mode="partial"`` returns the distinct in-range IDs in output order.
    """
    if m < 1:
        raise ValidationError("window size must be at least 1")
    if mode not in ("full", "partial"):
        raise ValidationError(f"unknown parse mode {mode!r}")

    listed: list[int] = []
    seen: set[int] = set()
    dups = dropped = 0
    for value in extract_ids(raw):
        if not 1 <= value <= m:
            dropped += 1
        elif value in seen:
            dups += 1
        else:
            seen.add(value)
            listed.append(value)

    if mode == "partial":
        report = ParseReport(bool(dups or dropped), dups, dropped, 0)
        return PartialRanking(tuple(listed), m), report

    if policy.missing != APPEND:
        raise ValidationError("full mode needs the append policy for missing IDs")
    if not listed:
        if policy.on_empty == "fail":
            raise ParseError(f"no identifier in 1..{m} found in model output")
        report = ParseReport(True, dups, dropped, m, fallback=True)
        return Permutation.identity(m), report

    missing = [i for i in range(1, m + 1) if i not in seen]
    perm = Permutation(tuple(listed + missing))
    report = ParseReport(bool(dups or dropped or missing), dups, dropped, len(missing))
    return perm, report


def serialize_ranking(order) -> str:
    return " > ".join(f"[{i}]" for i in order)
