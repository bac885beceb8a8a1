"""HTTP transport with retry and rate limiting.

The live transport is deliberately thin: one POST per request, JSON in and
out. Everything above it (clients, fixtures) is transport-agnostic so tests
can substitute in-process fakes.
"""

from __future__ import annotations

import threading
import time
from typing import Any, Callable, Protocol

from ..errors import TransportError

RETRY_ATTEMPTS = 3
RETRY_BASE_DELAY = 1.0  # seconds, doubled per attempt


class Transport(Protocol):
    def post(self, url: str, payload: Any, headers: dict[str, str]) -> Any:
        """Send one request, return the decoded JSON response body."""
        ...


class RetryableFailure(Exception):
    """Raised by transports for failures worth retrying (I/O, 429-class)."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class LiveTransport:
    def __init__(self, timeout: float = 30.0):
        self.timeout = timeout

    def post(self, url: str, payload: Any, headers: dict[str, str]) -> Any:
        import requests

        try:
            resp = requests.post(url, json=payload, headers=headers, timeout=self.timeout)
        except requests.RequestException as exc:
            raise RetryableFailure(f"request to {url} failed: {exc}") from exc
        if resp.status_code == 429 or resp.status_code >= 500:
            raise RetryableFailure(
                f"{url} answered {resp.status_code}", status=resp.status_code
            )
        if resp.status_code >= 400:
            raise TransportError(f"{url} answered {resp.status_code}", attempts=1,
                                 status=resp.status_code)
        return resp.json()


class PanicTransport:
    """Transport that must never be used; asserts replay stays offline."""

    def post(self, url: str, payload: Any, headers: dict[str, str]) -> Any:
        raise AssertionError(f"network use attempted in replay mode: POST {url}")


class TokenBucket:
    """Serializes calls to one endpoint at a configurable request rate."""

    def __init__(self, rate_per_sec: float = 1.0, clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        if rate_per_sec <= 0:
            raise ValueError("rate_per_sec must be positive")
        self.interval = 1.0 / rate_per_sec
        self.clock = clock
        self.sleep = sleep
        self._lock = threading.Lock()
        self._next_free = 0.0

    def acquire(self) -> None:
        with self._lock:
            now = self.clock()
            wait = self._next_free - now
            start = max(now, self._next_free)
            self._next_free = start + self.interval
        if wait > 0:
            self.sleep(wait)


def with_retry(call: Callable[[], Any], attempts: int = RETRY_ATTEMPTS,
               base_delay: float = RETRY_BASE_DELAY,
               sleep: Callable[[float], None] = time.sleep) -> Any:
    """Run ``call``, retrying RetryableFailure with exponential backoff."""
    delay = base_delay
    for attempt in range(1, attempts + 1):
        try:
            return call()
        except RetryableFailure as exc:
            if attempt == attempts:
                raise TransportError(str(exc), attempts=attempt, status=exc.status) from exc
            sleep(delay)
            delay *= 2
    raise AssertionError("unreachable")
