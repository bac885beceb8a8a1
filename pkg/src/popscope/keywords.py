"""Keyword discovery: list-eliciting prompts and completion parsing.

The prompt template forces the model into numbered-list form; the parser
turns the (often messy) continuation back into clean candidate keywords,
which are then ranked by real-world usage counts.
"""

from __future__ import annotations

import datetime as dt
import re
from dataclasses import dataclass
from urllib.parse import quote

from .backends.types import CountSeries

_RESIDUE = re.compile(r"^\d{1,4}[).:]")

# A list marker: 1-4 digits (no zero ordinal) plus ")", "." or ":", at the
# start of the text or after whitespace / comma / semicolon.
_MARKER = re.compile(r"(?:^|(?<=[\s,;]))([1-9]\d{0,3})[).:]")

_TRAILING_STOPWORD = re.compile(r"(?:^|[\s,])(?:and|or)\s*$", re.IGNORECASE)


@dataclass(frozen=True)
class KeywordCandidate:
    surface: str
    ordinal: int  # position in the model's list
    source_prompt: str = ""

    def __post_init__(self):
        if not self.surface or self.surface != self.surface.strip():
            raise ValueError(f"bad candidate surface: {self.surface!r}")
        if _RESIDUE.match(self.surface):
            raise ValueError(f"list-numbering residue in surface: {self.surface!r}")
        if self.ordinal < 1:
            raise ValueError("ordinal must be positive")


@dataclass(frozen=True)
class TrendReport:
    candidate: KeywordCandidate
    series: CountSeries | None  # None records a per-candidate backend failure

    def __post_init__(self):
        if self.series is not None and self.series.keyword != self.candidate.surface:
            raise ValueError("series keyword does not match candidate surface")

    @property
    def total(self) -> int | None:
        return None if self.series is None else self.series.total


def build_prompt(topic_text: str) -> str:
    """Render the list-eliciting prompt: stem, colon, newline, forced "1)"."""
    if not topic_text:
        raise ValueError("topic_text must be non-empty")
    stem = topic_text if topic_text.endswith(":") else topic_text + ":"
    return f"{stem}\n1)"


def _clean_surface(raw: str) -> str:
    text = raw.strip()
    while True:
        before = text
        text = text.rstrip()
        while text and text[-1] in ",.;":
            text = text[:-1].rstrip()
        stripped = _TRAILING_STOPWORD.sub("", text)
        if stripped != text:
            text = stripped
        if text == before:
            break
    text = text.lstrip(" \t,;")
    return text.strip()


def parse_numbered_list(completion: str, source_prompt: str = "") -> list[KeywordCandidate]:
    """Extract keyword candidates from a numbered-list completion.

    Total: never raises on arbitrary text; garbage yields an empty list.
    Accepts ``N)``, ``N.`` and ``N:`` markers. Text before the first marker
    is the continuation of the forced leading "1)" (the prompt supplies the
    marker), unless the list restarts at 1, in which case it is preamble.
    Duplicates collapse case-insensitively, first casing wins.
    """
    matches = list(_MARKER.finditer(completion))

    raw_items: list[tuple[int, str]] = []  # (ordinal, raw surface)
    if matches:
        first_num = int(matches[0].group(1))
        prefix = completion[: matches[0].start()]
        if first_num > 1 and prefix.strip():
            raw_items.append((first_num - 1, prefix))
        for i, match in enumerate(matches):
            end = matches[i + 1].start() if i + 1 < len(matches) else len(completion)
            raw_items.append((int(match.group(1)), completion[match.end():end]))
    elif completion.strip():
        raw_items.append((1, completion))

    cleaned: list[tuple[int, int, str]] = []  # (ordinal, appearance, surface)
    for appearance, (ordinal, raw) in enumerate(raw_items):
        surface = _clean_surface(raw)
        if not surface or _RESIDUE.match(surface):
            continue
        cleaned.append((ordinal, appearance, surface))
    cleaned.sort(key=lambda item: (item[0], item[1]))

    seen: set[str] = set()
    candidates = []
    for ordinal, _, surface in cleaned:
        key = surface.casefold()
        if key in seen:
            continue
        seen.add(key)
        candidates.append(KeywordCandidate(surface, ordinal, source_prompt))
    return candidates


def validate_keywords(candidates: list[KeywordCandidate], start_day: dt.date,
                      end_day: dt.date, counts_client) -> list[TrendReport]:
    """Rank candidates by total usage over the window.

    One report per candidate, sorted by descending total with ties broken
    by ordinal. A backend failure for one candidate becomes a null series,
    never a global failure.
    """
    if not candidates:
        raise ValueError("candidate list must be non-empty")
    if start_day > end_day:
        raise ValueError("invalid validation window")
    reports = []
    for candidate in candidates:
        try:
            series = counts_client.counts(candidate.surface, start_day, end_day)
        except Exception:
            series = None
        reports.append(TrendReport(candidate, series))
    reports.sort(key=lambda r: (r.series is None,
                                -(r.total if r.total is not None else 0),
                                r.candidate.ordinal))
    return reports


def context_urls(candidate: KeywordCandidate, start_day: dt.date,
                 end_day: dt.date) -> list[tuple[dt.date, str]]:
    """One public search URL per day in the window, scoped to keyword + day."""
    if start_day > end_day:
        raise ValueError("invalid window")
    urls = []
    day = start_day
    while day <= end_day:
        until = day + dt.timedelta(days=1)
        query = f"{candidate.surface} since:{day.isoformat()} until:{until.isoformat()}"
        urls.append((day, f"https://twitter.com/search?q={quote(query, safe='')}"))
        day = until
    return urls
