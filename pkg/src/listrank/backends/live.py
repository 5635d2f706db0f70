"""Chat-completions backend for OpenAI-compatible servers."""

from __future__ import annotations

import logging
import os
import threading
import time
from dataclasses import dataclass
from typing import Callable, Optional

import httpx
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt, wait_exponential

from ..prompting import HEURISTIC, TokenizerHandle
from .base import (
    BackendError,
    BackendTimeout,
    RankRequest,
    RankResponse,
    RateLimitError,
    TransportError,
)

logger = logging.getLogger(__name__)

# "[" + up to three digits + "]" + separator, rounded up.
TOKENS_PER_ID = 5


@dataclass(frozen=True)
class LiveConfig:
    base_url: str = "https://api.openai.com/v1"
    model: str = "gpt-4o-mini-2024-07-18"
    api_key_env: str = "OPENAI_API_KEY"
    timeout: float = 120.0
    max_retries: int = 5
    backoff_base: float = 1.0
    backoff_cap: float = 60.0
    max_concurrent: int = 8
    requests_per_minute: Optional[float] = None
    temperature: float = 0.0
    max_tokens: Optional[int] = None


class Throttle:
    """Spaces request starts at least ``60 / rpm`` seconds apart."""

    def __init__(self, rpm: Optional[float], clock=time.monotonic, sleep=time.sleep):
        self.interval = 60.0 / rpm if rpm else 0.0
        self._clock = clock
        self._sleep = sleep
        self._next = 0.0
        self._lock = threading.Lock()

    def wait(self) -> None:
        if not self.interval:
            return
        with self._lock:
            now = self._clock()
            if now < self._next:
                self._sleep(self._next - now)
                now = self._next
            self._next = now + self.interval


class LiveBackend:
    """Sends each window as one user message and reads back the first choice.

    Rate limits, timeouts and 5xx/transport failures are retried with
    exponential backoff; after ``max_retries`` the last error propagates.
    """

    def __init__(
        self,
        config: LiveConfig = LiveConfig(),
        client: Optional[httpx.Client] = None,
        tokenizer: TokenizerHandle = HEURISTIC,
        sleep: Callable[[float], None] = time.sleep,
        clock: Callable[[], float] = time.perf_counter,
    ):
        self.config = config
        api_key = os.environ.get(config.api_key_env, "")
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self.client = client or httpx.Client(timeout=config.timeout)
        self._headers = headers
        self.tokenizer = tokenizer
        self._sleep = sleep
        self._clock = clock
        self._slots = threading.BoundedSemaphore(config.max_concurrent)
        self._throttle = Throttle(config.requests_per_minute, sleep=sleep)

    def payload(self, request: RankRequest) -> dict:
        body = {
            "model": request.model_name or self.config.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": self.config.temperature,
        }
        if request.max_output_ids is not None:
            body["max_tokens"] = request.max_output_ids * TOKENS_PER_ID
        elif self.config.max_tokens is not None:
            body["max_tokens"] = self.config.max_tokens
        return body

    def _post(self, body: dict) -> dict:
        self._throttle.wait()
        url = self.config.base_url.rstrip("/") + "/chat/completions"
        try:
            resp = self.client.post(url, json=body, headers=self._headers)
        except httpx.TimeoutException as exc:
            raise BackendTimeout(f"timed out calling {url}: {exc}") from exc
        except httpx.TransportError as exc:
            raise TransportError(f"transport failure calling {url}: {exc}") from exc
        if resp.status_code == 429:
            raise RateLimitError(f"rate limited by {url}")
        if resp.status_code == 408 or resp.status_code >= 500:
            raise TransportError(f"{url} answered HTTP {resp.status_code}")
        if resp.status_code >= 400:
            raise BackendError(f"{url} rejected the request: HTTP {resp.status_code} {resp.text[:200]}")
        try:
            return resp.json()
        except ValueError as exc:
            raise BackendError(f"non-JSON response from {url}") from exc

    def rank_window(self, request: RankRequest) -> RankResponse:
        body = self.payload(request)
        retrying = Retrying(
            stop=stop_after_attempt(self.config.max_retries + 1),
            wait=wait_exponential(multiplier=self.config.backoff_base, max=self.config.backoff_cap),
            retry=retry_if_exception_type((RateLimitError, TransportError, BackendTimeout)),
            sleep=self._sleep,
            reraise=True,
            before_sleep=lambda rs: logger.warning(
                "retrying ranking call (attempt %d): %s",
                rs.attempt_number, rs.outcome.exception(),
            ),
        )
        with self._slots:
            start = self._clock()
            data = retrying(self._post, body)
            latency = self._clock() - start

        try:
            text = data["choices"][0]["message"]["content"] or ""
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError("response has no choices[0].message.content") from exc
        usage = data.get("usage") or {}
        n_in = usage.get("prompt_tokens")
        n_out = usage.get("completion_tokens")
        return RankResponse(
            raw_text=text,
            input_tokens=int(n_in) if n_in is not None else self.tokenizer(request.prompt),
            output_tokens=int(n_out) if n_out is not None else self.tokenizer(text),
            latency=max(latency, 0.0),
        )
