"""Record/replay cache for ranking calls, persisted as JSON lines."""

from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Dict, Optional

from .base import Backend, RankRequest, RankResponse, ReplayMiss


class TranscriptStore:
    """Thread-safe map from request hash to recorded response.

    Each line of the backing file is ``{"key", "model", "max_output_ids",
    "response": {...}}``. Later lines win when a key repeats.
    """

    def __init__(self, path: Optional[str | Path] = None):
        self.path = Path(path) if path is not None else None
        self._entries: Dict[str, RankResponse] = {}
        self._lock = threading.Lock()
        self._key_locks: Dict[str, threading.Lock] = {}
        if self.path is not None and self.path.exists():
            with self.path.open(encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        row = json.loads(line)
                        self._entries[row["key"]] = RankResponse(**row["response"])

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)

    def get(self, key: str) -> Optional[RankResponse]:
        with self._lock:
            return self._entries.get(key)

    def key_lock(self, key: str) -> threading.Lock:
        with self._lock:
            return self._key_locks.setdefault(key, threading.Lock())

    def put(self, request: RankRequest, response: RankResponse) -> None:
        key = request.key()
        with self._lock:
            self._entries[key] = response
            if self.path is not None:
                row = {
                    "key": key,
                    "model": request.model_name,
                    "max_output_ids": request.max_output_ids,
                    "response": {
                        "raw_text": response.raw_text,
                        "input_tokens": response.input_tokens,
                        "output_tokens": response.output_tokens,
                        "latency": response.latency,
                    },
                }
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(row, ensure_ascii=False) + "\n")


class ReplayBackend:
    """Serves recorded responses; on a miss, records ``inner`` or raises.

    Identical concurrent requests share one inner call: the per-key lock is held
    across the lookup, the call and the insert.
    """

    def __init__(self, store: TranscriptStore, inner: Optional[Backend] = None):
        self.store = store
        self.inner = inner
        self.hits = 0
        self.live_calls = 0
        self._count_lock = threading.Lock()

    def rank_window(self, request: RankRequest) -> RankResponse:
        key = request.key()
        with self.store.key_lock(key):
            cached = self.store.get(key)
            if cached is not None:
                with self._count_lock:
                    self.hits += 1
                return cached
            if self.inner is None:
                raise ReplayMiss(f"no recorded response for request {key[:12]}")
            response = self.inner.rank_window(request)
            self.store.put(request, response)
            with self._count_lock:
                self.live_calls += 1
            return response
