"""Deterministic in-process backends for tests and fixture generation.

Everything here is a pure function of its inputs (plus fixed constants),
so recording fixtures against :class:`SynthWorld` is reproducible down to
the byte.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import math
from typing import Any

import numpy as np

from .backends.types import GenerationParams

EXOTIC_PETS_TOPIC = "Here's a short list of exotic pets"
EXOTIC_PETS_PROMPT = "Here's a short list of exotic pets:\n1)"
EXOTIC_PETS_COMPLETION = (
    " Bats, 2) Monkeys, 3) Snakes, 4) Alligators, 5) Hedgehogs, 6) Ferrets, "
    "7) Iguanas, 8) Chinchillas, 9) Tarantulas, 10) Scorpions, "
    "and 11) Sugar Gliders."
)
EXOTIC_PETS_KEYWORDS = [
    "Bats", "Monkeys", "Snakes", "Alligators", "Hedgehogs", "Ferrets",
    "Iguanas", "Chinchillas", "Tarantulas", "Scorpions", "Sugar Gliders",
]

# The six validated keywords carry the reference totals; the rest are
# synthetic filler so every suggested keyword has count data.
KEYWORD_TOTALS = {
    "Monkeys": 36772,
    "Snakes": 29830,
    "Bats": 21156,
    "Alligators": 3258,
    "Tarantulas": 689,
    "Sugar Gliders": 196,
    "Hedgehogs": 1543,
    "Ferrets": 1201,
    "Iguanas": 877,
    "Chinchillas": 502,
    "Scorpions": 5120,
}

VALIDATION_WINDOW = (dt.date(2022, 12, 17), dt.date(2022, 12, 27))

BLOB_OF_KEYWORD = {
    "Monkeys": 0, "Snakes": 0,
    "Bats": 1, "Alligators": 1,
    "Tarantulas": 2, "Sugar Gliders": 2,
}
EMBED_DIM = 64

PROBE_MIX_PCT = {"ten": 14.0, "twenty": 16.0, "thirty": 30.0, "forty": 40.0}

_TAGS = ("ten", "twenty", "thirty", "forty")

# The shared post returned under both Monkeys and Snakes; exercises
# cross-keyword dedupe in collection.
DUP_POST_DAY = dt.date(2022, 12, 18)
DUP_POST_ID = "2022121800000"


def stable_hash(text: str) -> int:
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:4], "big")


def split_total(keyword: str, total: int, n_days: int) -> list[int]:
    """Deterministic per-day split of a total count; sums exactly."""
    rng = np.random.default_rng(stable_hash("counts:" + keyword))
    weights = rng.uniform(0.5, 1.5, size=n_days)
    fractions = np.cumsum(weights) / weights.sum()
    cumulative = np.floor(fractions * total + 0.5).astype(int)
    daily = np.diff(cumulative, prepend=0)
    return [int(v) for v in daily]


def mix_counts(n: int, pct: dict[str, float]) -> dict[str, int]:
    """Largest-remainder apportionment of n draws to the tag mix."""
    want = {t: n * pct[t] / 100.0 for t in _TAGS}
    base = {t: math.floor(want[t]) for t in _TAGS}
    deficit = n - sum(base.values())
    by_remainder = sorted(_TAGS, key=lambda t: (-(want[t] - base[t]),
                                                _TAGS.index(t)))
    for tag in by_remainder[:deficit]:
        base[tag] += 1
    return base


def _probe_generation(index: int, tag: str) -> str:
    day = (index % 27) + 1
    hour = 8 + (index % 12)
    minute = (13 * index) % 60
    second = (7 * index) % 60
    location = "USA" if index % 2 == 0 else "Canada"
    return (f" keeps coming up in my feed, take {index} || "
            f"created: 2023-01-{day:02d} {hour:02d}:{minute:02d}:{second:02d} || "
            f"location: {location} || probability: {tag}]] and then some chatter")


def probe_completions(prompt: str, n: int) -> list[str]:
    """n meta-wrapped continuations at the fixed probe tag mix."""
    counts = mix_counts(n, PROBE_MIX_PCT)
    tags = [t for t in _TAGS for _ in range(counts[t])]
    rng = np.random.default_rng(stable_hash("probe:" + prompt))
    order = rng.permutation(len(tags))
    return [_probe_generation(i, tags[order[i]]) for i in range(n)]


_CENTERS = None


def blob_centers() -> np.ndarray:
    global _CENTERS
    if _CENTERS is None:
        rng = np.random.default_rng(20221217)
        centers = rng.normal(0.0, 1.0, size=(3, EMBED_DIM))
        centers /= np.linalg.norm(centers, axis=1, keepdims=True)
        _CENTERS = centers * 14.0
    return _CENTERS


def blob_of_text(text: str) -> int:
    for keyword, blob in BLOB_OF_KEYWORD.items():
        if keyword in text:
            return blob
    return stable_hash(text) % 3


def embed_text(text: str) -> list[float]:
    center = blob_centers()[blob_of_text(text)]
    rng = np.random.default_rng(stable_hash("emb:" + text))
    vector = center + rng.normal(0.0, 0.55, size=EMBED_DIM)
    return [float(v) for v in vector]


def posts_for(keyword: str, day: dt.date) -> list[dict]:
    """Raw search-wire posts for one keyword-day; ids globally sortable."""
    ordered = sorted(KEYWORD_TOTALS)
    slot = 10 + (ordered.index(keyword) if keyword in ordered
                 else stable_hash(keyword) % 80)
    prefix = day.strftime("%Y%m%d")
    posts = []
    if keyword in ("Monkeys", "Snakes") and day == DUP_POST_DAY:
        posts.append({
            "post_id": DUP_POST_ID,
            "text": "Monkeys and Snakes everywhere on the trail today",
            "created_at": f"{day.isoformat()}T06:45:00Z",
            "author_id": "author-shared-1",
            "author_handle": "trailwatcher",
            "author_name": "Trail Watcher",
            "author_followers": 320,
            "lang": "en",
            "geo": "USA",
            "repost": False,
        })
    for i in range(10):
        geo: str | None
        if i % 3 == 0:
            geo = "USA"
        elif i % 3 == 1:
            geo = f"{40 + i * 0.01:.4f},{-74 - i * 0.01:.4f}"
        else:
            geo = None
        posts.append({
            "post_id": f"{prefix}{slot:02d}{i:03d}",
            "text": (f"Heard about {keyword} at the park on "
                     f"{day.strftime('%B %d')}, thread {i}"),
            "created_at": (f"{day.isoformat()}T{7 + (i % 12):02d}:"
                           f"{(11 * i) % 60:02d}:{(17 * i) % 60:02d}Z"),
            "author_id": f"author-{slot:02d}-{i % 5}",
            "author_handle": f"{keyword.lower().replace(' ', '_')}_{i % 5}",
            "author_name": f"Fan {i % 5} of {keyword}",
            "author_followers": 100 + 13 * i,
            "lang": "en",
            "geo": geo,
            "repost": i == 9,
        })
    if day.toordinal() % 3 == 0:
        posts.append({
            "post_id": f"{prefix}{slot:02d}990",
            "text": f"Vi {keyword} en el parque hoy",
            "created_at": f"{day.isoformat()}T20:05:09Z",
            "author_id": f"author-{slot:02d}-es",
            "author_handle": f"{keyword.lower().replace(' ', '_')}_es",
            "author_name": f"Aficionado de {keyword}",
            "author_followers": 44,
            "lang": "es",
            "geo": None,
            "repost": False,
        })
    return posts


class SynthWorld:
    """Handler for InMemoryTransport covering all four endpoints."""

    def handle(self, url: str, payload: Any) -> Any:
        if url.endswith("completion") or url.endswith("complete"):
            return self._complete(payload)
        if url.endswith("embed"):
            return self._embed(payload)
        if url.endswith("counts"):
            return self._counts(payload)
        if url.endswith("search"):
            return self._search(payload)
        raise AssertionError(f"SynthWorld has no handler for {url}")

    def _complete(self, payload: dict) -> dict:
        prompt = payload["prompt"]
        n = int(payload.get("n", 1))
        if prompt == EXOTIC_PETS_PROMPT:
            texts = [EXOTIC_PETS_COMPLETION] * n
        elif prompt.startswith("[[text: "):
            texts = probe_completions(prompt, n)
        else:
            texts = [" Alpha, 2) Beta, 3) Gamma"] * n
        return {"choices": [{"text": t} for t in texts]}

    def _embed(self, payload: dict) -> dict:
        return {"embeddings": [embed_text(t) for t in payload["texts"]]}

    def _counts(self, payload: dict) -> dict:
        keyword = payload["keyword"]
        start = dt.date.fromisoformat(payload["start_day"])
        end = dt.date.fromisoformat(payload["end_day"])
        n_days = (end - start).days + 1
        total = KEYWORD_TOTALS.get(keyword,
                                   200 + stable_hash(keyword) % 3000)
        daily = split_total(keyword, total, n_days)
        return {"daily": [
            {"date": (start + dt.timedelta(days=i)).isoformat(),
             "count": daily[i]}
            for i in range(n_days)
        ]}

    def _search(self, payload: dict) -> dict:
        day = dt.date.fromisoformat(payload["day"])
        return {"posts": posts_for(payload["query"], day)}


class InMemoryTransport:
    """Transport backed by a handler function; counts calls for assertions."""

    def __init__(self, handler):
        self.handler = handler
        self.calls = 0

    def post(self, url: str, payload: Any, headers: dict[str, str]) -> Any:
        self.calls += 1
        return self.handler(url, payload)


class MockTagCompletion:
    """Generation-backend stand-in emitting an exact overall tag mix.

    Tracks emitted counts so the cumulative mix converges to the target
    even when single batches cannot hit it exactly (25% of 50, say).
    Matches the CompletionClient surface that run_probes relies on.
    """

    def __init__(self, pct: dict[str, float], sample_cap: int = 128):
        if abs(sum(pct.values()) - 100.0) > 1e-9:
            raise ValueError("tag percentages must sum to 100")
        self.pct = dict(pct)
        self.sample_cap = sample_cap
        self.emitted = {t: 0 for t in _TAGS}
        self._index = 0

    def complete(self, prompt: str, params: GenerationParams,
                 chunk_tag: int | None = None) -> list[str]:
        n = params.sample_count
        total_after = sum(self.emitted.values()) + n
        want = {t: total_after * self.pct[t] / 100.0 - self.emitted[t]
                for t in _TAGS}
        base = {t: max(0, math.floor(want[t])) for t in _TAGS}
        deficit = n - sum(base.values())
        by_remainder = sorted(_TAGS, key=lambda t: (-(want[t] - base[t]),
                                                    _TAGS.index(t)))
        for tag in by_remainder[:deficit]:
            base[tag] += 1
        texts = []
        for tag in _TAGS:
            for _ in range(base[tag]):
                texts.append(_probe_generation(self._index, tag))
                self._index += 1
            self.emitted[tag] += base[tag]
        return texts
