"""Quota-controlled post collection.

Planning translates per-keyword daily counts into per-day fetch allocations
(uniform or proportional), clipped chronologically so no keyword exceeds its
overall cap. Collection then walks the plan day by day, fetching through the
search backend and upserting into the store.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING

from .errors import PlanError, PopscopeError

if TYPE_CHECKING:
    from .store import Store


@dataclass(frozen=True)
class CollectFilter:
    language: str | None = None  # lowercase ISO-639-1
    location: str | None = None  # country code or bounding region
    exclude_reposts: bool = False

    def __post_init__(self):
        if self.language is not None:
            if len(self.language) != 2 or not self.language.islower():
                raise ValueError("language must be a lowercase 2-letter code")


class SamplingMode(str, Enum):
    UNIFORM = "uniform"
    PROPORTIONAL = "proportional"


@dataclass(frozen=True)
class SamplingPolicy:
    mode: SamplingMode
    per_day_cap: int
    overall_cap_per_keyword: int

    def __post_init__(self):
        if self.per_day_cap < 1 or self.overall_cap_per_keyword < 1:
            raise ValueError("caps must be positive")
        if self.per_day_cap > self.overall_cap_per_keyword:
            raise ValueError("per_day_cap must not exceed overall_cap_per_keyword")


@dataclass(frozen=True)
class Post:
    post_id: str
    text: str
    created_at: dt.datetime  # UTC
    author_id: str
    lang: str
    geo: str | None
    keyword: str

    def __post_init__(self):
        if self.created_at.tzinfo is None:
            raise ValueError("created_at must be timezone-aware (UTC)")


@dataclass(frozen=True)
class CollectionJob:
    keywords: tuple[str, ...]
    start_day: dt.date
    end_day: dt.date
    filter: CollectFilter
    policy: SamplingPolicy
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "keywords", tuple(self.keywords))
        if not self.keywords:
            raise ValueError("keywords must be non-empty")
        if self.start_day > self.end_day:
            raise ValueError("start_day must not be after end_day")

    def days(self) -> list[dt.date]:
        span = (self.end_day - self.start_day).days + 1
        return [self.start_day + dt.timedelta(days=i) for i in range(span)]


@dataclass
class KeywordStats:
    planned: int = 0
    fetched: int = 0
    stored: int = 0
    duplicates: int = 0
    failed_days: list[str] = field(default_factory=list)


@dataclass
class CollectionStats:
    per_keyword: dict[str, KeywordStats]
    seed: int

    def as_dict(self) -> dict:
        return {
            "seed": self.seed,
            "per_keyword": {
                k: {
                    "planned": s.planned,
                    "fetched": s.fetched,
                    "stored": s.stored,
                    "duplicates": s.duplicates,
                    "failed_days": s.failed_days,
                }
                for k, s in self.per_keyword.items()
            },
        }


def _round_half_up_ratio(numerator: int, denominator: int) -> int:
    # floor(numerator/denominator + 1/2) in exact integer arithmetic
    return (2 * numerator + denominator) // (2 * denominator)


def plan_allocation(
    daily_counts: dict[str, list[tuple[dt.date, int]]],
    policy: SamplingPolicy,
) -> dict[tuple[str, dt.date], int]:
    """Compute the per-(keyword, day) fetch allocation.

    Uniform: min(per_day_cap, count). Proportional: min(count,
    round_half_up(per_day_cap * count / M)) with M the largest count over
    every (keyword, day) cell; M = 0 yields all zeros. Either way the
    chronological prefix sum per keyword is clipped at the overall cap.
    """
    if not daily_counts:
        raise PlanError("no keywords to plan")
    ranges = {tuple(day for day, _ in series) for series in daily_counts.values()}
    if len(ranges) != 1:
        raise PlanError("keywords do not share the same date range")

    m = max((count for series in daily_counts.values() for _, count in series),
            default=0)

    allocation: dict[tuple[str, dt.date], int] = {}
    for keyword, series in daily_counts.items():
        remaining = policy.overall_cap_per_keyword
        for day, count in series:
            if count < 0:
                raise PlanError(f"negative count for {keyword} on {day}")
            if policy.mode is SamplingMode.UNIFORM:
                cell = min(policy.per_day_cap, count)
            else:
                if m == 0:
                    cell = 0
                else:
                    cell = min(count, _round_half_up_ratio(policy.per_day_cap * count, m))
            cell = min(cell, remaining)
            remaining -= cell
            allocation[(keyword, day)] = cell
    return allocation


def run_collection(job: CollectionJob, counts_client, search_client,
                   store: "Store") -> CollectionStats:
    """Fetch counts, plan, then collect posts day by day per keyword.

    A failed day is recorded in the stats and the job continues. Within a
    day the search client returns the first ``allocation`` posts by
    ascending post id, so a fixed fixture and seed reproduce the same
    stored set.
    """
    daily_counts: dict[str, list[tuple[dt.date, int]]] = {}
    for keyword in job.keywords:
        series = counts_client.counts(keyword, job.start_day, job.end_day)
        daily_counts[keyword] = list(series.daily)

    allocation = plan_allocation(daily_counts, job.policy)

    store.upsert_keywords(job.keywords)
    stats = CollectionStats(per_keyword={k: KeywordStats() for k in job.keywords},
                            seed=job.seed)
    for keyword in job.keywords:
        kstats = stats.per_keyword[keyword]
        for day in job.days():
            quota = allocation[(keyword, day)]
            kstats.planned += quota
            if quota == 0:
                continue
            authors: dict[str, dict] = {}
            try:
                posts = search_client.search(keyword, day, job.filter, quota,
                                             authors_out=authors)
            except PopscopeError:
                kstats.failed_days.append(day.isoformat())
                continue
            kstats.fetched += len(posts)
            inserted, duplicates = store.upsert_posts(posts)
            if authors:
                store.upsert_users(list(authors.values()))
            kstats.stored += inserted
            kstats.duplicates += duplicates
    return stats
