"""Chat-completion client for a real LLM backend.

One HTTP request per completion with bounded retry and exponential backoff;
responses go through the same strict parser as the mock provider. Never a
test dependency: tests inject a fake session.
"""

from __future__ import annotations

import os
import threading
import time
from dataclasses import dataclass, field

import requests

from ..errors import Timeout
from .base import OracleRequest, OracleResponse, parse_response, render_prompt, split_messages

__all__ = ["RemoteOracleConfig", "RemoteOracle", "MemoizingOracle"]


@dataclass(frozen=True)
class RemoteOracleConfig:
    endpoint: str
    model: str
    auth_env: str = "LAMLAB_ORACLE_TOKEN"
    timeout_s: float = 30.0
    max_retries: int = 3
    backoff_s: float = 0.5
    # Minimum spacing between requests across all threads; 0 disables limiting.
    min_interval_s: float = 0.0


class RemoteOracle:
    def __init__(self, config: RemoteOracleConfig, session=None, sleep=time.sleep):
        self._config = config
        self._session = session if session is not None else requests.Session()
        self._sleep = sleep
        self._gate = threading.Lock()
        self._last_request = 0.0

    def _rate_limit(self) -> None:
        if self._config.min_interval_s <= 0:
            return
        with self._gate:
            wait = self._config.min_interval_s - (time.monotonic() - self._last_request)
            if wait > 0:
                self._sleep(wait)
            self._last_request = time.monotonic()

    def complete(self, request: OracleRequest) -> OracleResponse:
        rendered = render_prompt(request.template_id, request.substitutions)
        payload = {
            "model": self._config.model,
            "messages": split_messages(rendered),
            "temperature": request.decoding.temperature,
            "top_p": request.decoding.top_p,
            "max_tokens": request.max_tokens,
        }
        headers = {}
        token = os.environ.get(self._config.auth_env, "")
        if token:
            headers["Authorization"] = f"Bearer {token}"

        start = time.perf_counter()
        last_error = "no attempt made"
        for attempt in range(1, self._config.max_retries + 1):
            self._rate_limit()
            try:
                resp = self._session.post(
                    self._config.endpoint,
                    json=payload,
                    headers=headers,
                    timeout=self._config.timeout_s,
                )
            except requests.RequestException as exc:
                last_error = f"request failed: {exc}"
            else:
                if resp.status_code == 200:
                    raw = _extract_content(resp)
                    parsed, parse_error = parse_response(request.template_id, raw)
                    return OracleResponse(
                        raw_text=raw,
                        parsed=parsed,
                        parse_error=parse_error,
                        latency_s=time.perf_counter() - start,
                        attempts=attempt,
                    )
                last_error = f"HTTP {resp.status_code}"
            if attempt < self._config.max_retries:
                self._sleep(self._config.backoff_s * (2 ** (attempt - 1)))
        raise Timeout(
            f"oracle gave no answer after {self._config.max_retries} attempts ({last_error})"
        )


def _extract_content(resp) -> str:
    try:
        body = resp.json()
        return body["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError):
        # Surface the malformed body via the strict parser rather than raising here.
        return resp.text


@dataclass
class MemoizingOracle:
    """Exact-request memoization wrapper around another provider."""

    inner: object
    _cache: dict = field(default_factory=dict)

    def complete(self, request: OracleRequest) -> OracleResponse:
        key = request.cache_key()
        if key not in self._cache:
            self._cache[key] = self.inner.complete(request)
        return self._cache[key]
