"""Clients for the four external capabilities.

Every client funnels through :class:`Endpoint`, which owns mode selection
(live / record / replay), retries, rate limiting, and fixture bookkeeping.
Wire formats are our own vendor-neutral JSON shapes; adapters translate
them into domain values and fail loudly on anything off-contract.
"""

from __future__ import annotations

import datetime as dt
import time
from typing import Any, Callable

from ..collector import CollectFilter, Post
from ..errors import ProtocolError, WindowError
from .canonical import BackendRequest, RequestKind
from .fixtures import FixtureStore, Mode
from .transport import TokenBucket, Transport, with_retry
from .types import EMBED_TEXT_CAP, SAMPLE_COUNT_CAP, GenerationParams


class Endpoint:
    """One logical backend endpoint plus its operating mode."""

    def __init__(self, kind: RequestKind, endpoint_id: str, url: str,
                 mode: Mode, transport: Transport | None = None,
                 fixture_store: FixtureStore | None = None,
                 api_key: str | None = None,
                 limiter: TokenBucket | None = None,
                 sleep: Callable[[float], None] = time.sleep):
        if mode in (Mode.LIVE, Mode.RECORD) and transport is None:
            raise ValueError(f"mode {mode.value} requires a transport")
        if mode in (Mode.RECORD, Mode.REPLAY) and fixture_store is None:
            raise ValueError(f"mode {mode.value} requires a fixture store")
        self.kind = kind
        self.endpoint_id = endpoint_id
        self.url = url
        self.mode = mode
        self.transport = transport
        self.fixtures = fixture_store
        self.api_key = api_key
        self.limiter = limiter
        self.sleep = sleep

    def request(self, payload: Any) -> Any:
        req = BackendRequest(self.kind, self.endpoint_id, payload)
        if self.mode is Mode.REPLAY:
            return self.fixtures.lookup(req)
        if self.limiter is not None:
            self.limiter.acquire()
        headers = {"content-type": "application/json"}
        if self.api_key:
            headers["authorization"] = f"Bearer {self.api_key}"
        response = with_retry(
            lambda: self.transport.post(self.url, payload, headers),
            sleep=self.sleep,
        )
        if self.mode is Mode.RECORD:
            self.fixtures.record(req, response)
        return response


def _expect(condition: bool, message: str):
    if not condition:
        raise ProtocolError(message)


class CompletionClient:
    """Text completion: one prompt in, ``sample_count`` strings out."""

    def __init__(self, endpoint: Endpoint, sample_cap: int = SAMPLE_COUNT_CAP):
        self.endpoint = endpoint
        self.sample_cap = sample_cap

    def complete(self, prompt: str, params: GenerationParams,
                 chunk_tag: int | None = None) -> list[str]:
        if not prompt:
            raise ValueError("prompt must be non-empty")
        if params.sample_count > self.sample_cap:
            raise ValueError(f"sample_count exceeds configured cap {self.sample_cap}")
        payload = {
            "prompt": prompt,
            "temperature": params.temperature,
            "top_p": params.top_p,
            "max_tokens": params.max_tokens,
            "n": params.sample_count,
            "stop": list(params.stop_sequences),
        }
        if chunk_tag is not None:
            # Disambiguates otherwise-identical requests in fixture keys.
            payload["chunk"] = chunk_tag
        response = self.endpoint.request(payload)
        choices = response.get("choices")
        _expect(isinstance(choices, list), "completion response lacks 'choices'")
        _expect(len(choices) == params.sample_count,
                f"expected {params.sample_count} completions, got {len(choices)}")
        texts = []
        for choice in choices:
            text = choice.get("text")
            _expect(isinstance(text, str), "completion choice lacks 'text'")
            texts.append(_truncate_at_stop(text, params.stop_sequences))
        return texts


def _truncate_at_stop(text: str, stops: tuple[str, ...]) -> str:
    cut = len(text)
    for stop in stops:
        idx = text.find(stop)
        if idx != -1:
            cut = min(cut, idx)
    return text[:cut]


class EmbedClient:
    """Text embedding; width must stay constant across a session."""

    def __init__(self, endpoint: Endpoint, text_cap: int = EMBED_TEXT_CAP):
        self.endpoint = endpoint
        self.text_cap = text_cap
        self._dim: int | None = None

    def embed(self, texts: list[str]) -> list[list[float]]:
        if not texts:
            raise ValueError("texts must be non-empty")
        for text in texts:
            if len(text) > self.text_cap:
                raise ValueError("text exceeds embedding length cap")
        response = self.endpoint.request({"texts": list(texts)})
        rows = response.get("embeddings")
        _expect(isinstance(rows, list), "embed response lacks 'embeddings'")
        _expect(len(rows) == len(texts),
                f"expected {len(texts)} embedding rows, got {len(rows)}")
        widths = {len(row) for row in rows}
        _expect(len(widths) == 1, "ragged embedding rows in response")
        width = widths.pop()
        if self._dim is None:
            self._dim = width
        _expect(width == self._dim,
                f"embedding width changed from {self._dim} to {width}")
        return [[float(v) for v in row] for row in rows]


def _parse_daily(entries: list[tuple[str, int]], keyword: str,
                 start_day: dt.date, end_day: dt.date):
    from .types import CountSeries

    daily = []
    for date_str, count in entries:
        try:
            day = dt.date.fromisoformat(date_str)
        except ValueError as exc:
            raise ProtocolError(f"bad date in counts response: {date_str}") from exc
        _expect(isinstance(count, int) and count >= 0,
                f"bad count for {date_str}: {count!r}")
        daily.append((day, count))
    try:
        return CountSeries.from_daily(keyword, start_day, end_day, daily)
    except ValueError as exc:
        raise ProtocolError(f"counts response violates series contract: {exc}") from exc


def _check_window_rejection(response: Any):
    error = response.get("error") if isinstance(response, dict) else None
    if error and error.get("type") == "window_rejected":
        raise WindowError(error.get("message", "window rejected by backend"))


class PostCountClient:
    """Counts adapter for a post-count endpoint (daily buckets)."""

    def __init__(self, endpoint: Endpoint):
        self.endpoint = endpoint

    def counts(self, keyword: str, start_day: dt.date, end_day: dt.date):
        if start_day > end_day:
            raise ValueError("start_day must not be after end_day")
        response = self.endpoint.request({
            "keyword": keyword,
            "start_day": start_day.isoformat(),
            "end_day": end_day.isoformat(),
            "granularity": "day",
        })
        _check_window_rejection(response)
        entries = response.get("daily")
        _expect(isinstance(entries, list), "counts response lacks 'daily'")
        pairs = [(e.get("date"), e.get("count")) for e in entries]
        return _parse_daily(pairs, keyword, start_day, end_day)


class PageViewCountClient:
    """Counts adapter for an encyclopedia page-view endpoint."""

    def __init__(self, endpoint: Endpoint):
        self.endpoint = endpoint

    def counts(self, keyword: str, start_day: dt.date, end_day: dt.date):
        if start_day > end_day:
            raise ValueError("start_day must not be after end_day")
        response = self.endpoint.request({
            "article": keyword.replace(" ", "_"),
            "start": start_day.strftime("%Y%m%d"),
            "end": end_day.strftime("%Y%m%d"),
        })
        _check_window_rejection(response)
        items = response.get("items")
        _expect(isinstance(items, list), "pageview response lacks 'items'")
        pairs = []
        for item in items:
            stamp = str(item.get("timestamp", ""))
            _expect(len(stamp) >= 8, f"bad pageview timestamp {stamp!r}")
            date_str = f"{stamp[0:4]}-{stamp[4:6]}-{stamp[6:8]}"
            pairs.append((date_str, item.get("views")))
        return _parse_daily(pairs, keyword, start_day, end_day)


class SearchClient:
    """Post search for one keyword and day, paged, deterministically ordered."""

    def __init__(self, endpoint: Endpoint):
        self.endpoint = endpoint

    def search(self, query: str, day: dt.date, filters: CollectFilter,
               limit: int, authors_out: dict[str, dict] | None = None) -> list[Post]:
        if limit < 1:
            raise ValueError("limit must be >= 1")
        # The request deliberately excludes `limit`: the day's full match set
        # is fetched (paged) and the first `limit` posts by ascending id are
        # kept, so one fixture serves any allocation.
        base_payload = {
            "query": query,
            "day": day.isoformat(),
            "lang": filters.language,
            "location": filters.location,
            "exclude_reposts": filters.exclude_reposts,
        }
        posts: list[Post] = []
        token: str | None = None
        while True:
            payload = dict(base_payload)
            if token is not None:
                payload["token"] = token
            response = self.endpoint.request(payload)
            error = response.get("error") if isinstance(response, dict) else None
            if error and error.get("type") == "bad_token":
                raise ProtocolError(f"pagination token rejected: {token!r}")
            raw_posts = response.get("posts")
            _expect(isinstance(raw_posts, list), "search response lacks 'posts'")
            for raw in raw_posts:
                post = self._parse_post(raw, query)
                if not self._matches(post, day, filters, raw):
                    continue
                posts.append(post)
                if authors_out is not None and raw.get("author_id"):
                    authors_out[raw["author_id"]] = {
                        "author_id": raw["author_id"],
                        "handle": raw.get("author_handle", ""),
                        "display_name": raw.get("author_name", ""),
                        "followers": int(raw.get("author_followers", 0)),
                    }
            token = response.get("next_token")
            if token is None:
                break
        posts.sort(key=lambda p: p.post_id)
        return posts[:limit]

    @staticmethod
    def _parse_post(raw: dict, query: str) -> Post:
        try:
            created = dt.datetime.fromisoformat(str(raw["created_at"]).replace("Z", "+00:00"))
        except (KeyError, ValueError) as exc:
            raise ProtocolError(f"bad created_at in search response: {exc}") from exc
        if created.tzinfo is None:
            created = created.replace(tzinfo=dt.timezone.utc)
        try:
            return Post(
                post_id=str(raw["post_id"]),
                text=str(raw["text"]),
                created_at=created.astimezone(dt.timezone.utc),
                author_id=str(raw.get("author_id", "")),
                lang=str(raw.get("lang", "")),
                geo=raw.get("geo"),
                keyword=query,
            )
        except KeyError as exc:
            raise ProtocolError(f"search post lacks field {exc}") from exc

    @staticmethod
    def _matches(post: Post, day: dt.date, filters: CollectFilter, raw: dict) -> bool:
        if post.created_at.date() != day:
            return False
        if filters.language is not None and post.lang != filters.language:
            return False
        if filters.location is not None and (post.geo or "") != filters.location:
            return False
        if filters.exclude_reposts and raw.get("repost", False):
            return False
        return True
