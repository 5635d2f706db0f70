"""Readers and writers for the file formats the toolkit exchanges.

Corpus: JSON lines ``{"docid", "contents"}``. Queries: ``qid<TAB>text``.
Runs: ``qid Q0 docid rank score tag``. Qrels: ``qid 0 docid rel``.
Usage ledgers: JSON lines, one backend call per line.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

from .core import (
    DEFAULT_PRICES,
    CandidateList,
    Passage,
    PriceSheet,
    Qrels,
    Query,
    UsageRecord,
    ValidationError,
)


class InputError(ValidationError):
    def __init__(self, path, lineno: int, message: str):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = str(path)
        self.lineno = lineno


def _lines(path) -> Iterator[Tuple[int, str]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if line.strip():
                yield lineno, line


def cap_bytes(text: str, max_bytes: Optional[int]) -> str:
    if max_bytes is None:
        return text
    raw = text.encode("utf-8")
    if len(raw) <= max_bytes:
        return text
    return raw[:max_bytes].decode("utf-8", errors="ignore")


def load_corpus(path, max_bytes: Optional[int] = None) -> Dict[str, str]:
    corpus: Dict[str, str] = {}
    for lineno, line in _lines(path):
        try:
            row = json.loads(line)
            doc_id, text = str(row["docid"]), row["contents"]
        except (ValueError, KeyError, TypeError) as exc:
            raise InputError(path, lineno, f"bad corpus record ({exc})") from None
        corpus[doc_id] = cap_bytes(text, max_bytes)
    return corpus


def load_queries(path) -> Dict[str, str]:
    queries: Dict[str, str] = {}
    for lineno, line in _lines(path):
        qid, sep, text = line.partition("\t")
        if not sep or not qid.strip() or not text.strip():
            raise InputError(path, lineno, "expected 'qid<TAB>text'")
        queries[qid.strip()] = text.strip()
    return queries


@dataclass(frozen=True)
class RunEntry:
    doc_id: str
    rank: int
    score: float


def load_run(path) -> Dict[str, List[RunEntry]]:
    """Entries per query sorted by rank; queries keep their first-seen order."""
    run: Dict[str, List[RunEntry]] = {}
    for lineno, line in _lines(path):
        parts = line.split()
        if len(parts) != 6:
            raise InputError(path, lineno, f"expected 6 columns, found {len(parts)}")
        qid, _, doc_id, rank, score, _ = parts
        try:
            entry = RunEntry(doc_id, int(rank), float(score))
        except ValueError:
            raise InputError(path, lineno, "rank must be an integer and score a number") from None
        entries = run.setdefault(qid, [])
        if any(e.doc_id == doc_id for e in entries):
            raise InputError(path, lineno, f"doc {doc_id!r} repeated for query {qid!r}")
        entries.append(entry)
    for entries in run.values():
        entries.sort(key=lambda e: (e.rank, -e.score))
    return run


def run_rankings(run: Mapping[str, Sequence[RunEntry]]) -> Dict[str, List[str]]:
    return {qid: [e.doc_id for e in entries] for qid, entries in run.items()}


def load_qrels(path) -> Qrels:
    qrels = Qrels()
    for lineno, line in _lines(path):
        parts = line.split()
        if len(parts) != 4:
            raise InputError(path, lineno, f"expected 'qid 0 docid rel', found {len(parts)} columns")
        qid, _, doc_id, rel = parts
        try:
            qrels.add(qid, doc_id, int(rel))
        except ValueError as exc:
            raise InputError(path, lineno, str(exc)) from None
    return qrels


def build_candidates(
    run: Mapping[str, Sequence[RunEntry]],
    corpus: Mapping[str, str],
    queries: Mapping[str, str],
    depth: Optional[int] = None,
    run_path="run",
) -> List[CandidateList]:
    out = []
    for qid, entries in run.items():
        if qid not in queries:
            raise ValidationError(f"{run_path}: query {qid!r} has no text in the queries file")
        passages = []
        for e in entries[:depth]:
            if e.doc_id not in corpus:
                raise ValidationError(f"{run_path}: doc {e.doc_id!r} (query {qid}) not in corpus")
            passages.append(Passage(e.doc_id, corpus[e.doc_id]))
        out.append(CandidateList(Query(qid, queries[qid]), tuple(passages)))
    return out


def format_run(rankings: Iterable[Tuple[str, Sequence[str]]], tag: str) -> str:
    """Run lines with synthetic scores ``N - rank + 1`` (strictly descending)."""
    lines = []
    for qid, doc_ids in rankings:
        n = len(doc_ids)
        for rank, doc_id in enumerate(doc_ids, start=1):
            lines.append(f"{qid} Q0 {doc_id} {rank} {n - rank + 1} {tag}")
    return "".join(line + "\n" for line in lines)


def usage_to_row(u: UsageRecord, strategy: str) -> dict:
    return {
        "query_id": u.query_id,
        "strategy": strategy,
        "pass": u.pass_index,
        "window_start": u.window_span[0],
        "window_end": u.window_span[1],
        "input_tokens": u.input_tokens,
        "output_tokens": u.output_tokens,
        "latency": u.latency,
    }


def row_to_usage(row: Mapping) -> UsageRecord:
    return UsageRecord(
        query_id=str(row["query_id"]),
        input_tokens=int(row["input_tokens"]),
        output_tokens=int(row["output_tokens"]),
        latency=float(row["latency"]),
        window_span=(int(row["window_start"]), int(row["window_end"])),
        pass_index=int(row.get("pass", 1)),
    )


def format_ledger(rows: Iterable[Mapping]) -> str:
    return "".join(json.dumps(r, separators=(",", ":")) + "\n" for r in rows)


def load_ledger(path) -> Dict[str, List[UsageRecord]]:
    by_strategy: Dict[str, List[UsageRecord]] = {}
    for lineno, line in _lines(path):
        try:
            row = json.loads(line)
            by_strategy.setdefault(row["strategy"], []).append(row_to_usage(row))
        except (ValueError, KeyError, TypeError) as exc:
            raise InputError(path, lineno, f"bad ledger record ({exc})") from None
    return by_strategy


def load_price_sheets(path: Optional[str | Path] = None) -> Dict[str, PriceSheet]:
    """Price file: ``{"model": {"input_per_1k": "...", "output_per_1k": "..."}}``."""
    if path is None:
        return dict(DEFAULT_PRICES)
    data = json.loads(Path(path).read_text(encoding="utf-8"), parse_float=Decimal)
    sheets = {}
    for model, entry in data.items():
        try:
            sheets[model] = PriceSheet(
                model, Decimal(str(entry["input_per_1k"])), Decimal(str(entry["output_per_1k"]))
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"{path}: bad price entry for {model!r} ({exc})") from None
    return sheets
