"""Value types shared by the backend clients."""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

# Upper bound on completions per request; generous, but stops runaway fanout.
SAMPLE_COUNT_CAP = 128

# Per-text length cap accepted by the embedding endpoint.
EMBED_TEXT_CAP = 8192


@dataclass(frozen=True)
class GenerationParams:
    temperature: float = 0.7
    top_p: float = 1.0
    max_tokens: int = 256
    sample_count: int = 1
    stop_sequences: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not 0 < self.top_p <= 1:
            raise ValueError("top_p must be in (0, 1]")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")
        if self.sample_count < 1:
            raise ValueError("sample_count must be positive")
        if self.sample_count > SAMPLE_COUNT_CAP:
            raise ValueError(f"sample_count exceeds hard cap {SAMPLE_COUNT_CAP}")
        object.__setattr__(self, "stop_sequences", tuple(self.stop_sequences))


@dataclass(frozen=True)
class CountSeries:
    """Per-day usage counts for one keyword over a closed date window."""

    keyword: str
    start_day: dt.date
    end_day: dt.date
    daily: tuple[tuple[dt.date, int], ...]
    total: int

    def __post_init__(self):
        object.__setattr__(self, "daily", tuple(self.daily))
        expected = self.start_day
        for day, count in self.daily:
            if day != expected:
                raise ValueError(f"daily dates not consecutive at {day}")
            if count < 0:
                raise ValueError(f"negative count on {day}")
            expected = day + dt.timedelta(days=1)
        if self.daily and self.daily[-1][0] != self.end_day:
            raise ValueError("daily series does not end on end_day")
        if self.total != sum(c for _, c in self.daily):
            raise ValueError("total does not equal sum of daily counts")

    @classmethod
    def from_daily(cls, keyword: str, start_day: dt.date, end_day: dt.date,
                   daily: list[tuple[dt.date, int]]) -> "CountSeries":
        return cls(keyword, start_day, end_day, tuple(daily),
                   sum(c for _, c in daily))
