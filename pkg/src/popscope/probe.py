"""Probe a fine-tuned generation backend and audit sentinel convergence.

Probes are injected inside the corpus grammar (``[[text: <probe>``) so a
converged model completes the metadata tail, making the probability
sentinel measurable.
"""

from __future__ import annotations

import dataclasses
import datetime as dt
import uuid
from dataclasses import dataclass

from .backends.canonical import canonical_json
from .backends.types import GenerationParams
from .corpus import TAG_EXPECTED_PCT, MetaParseError, ProbTag, parse
from .errors import InsufficientDataError, PopscopeError
from .store import ProbeRow, Store, format_ts

UNRELIABLE_FAILURE_RATE = 0.5


@dataclass(frozen=True)
class ProbeSpec:
    probes: tuple[str, ...]
    params: GenerationParams
    samples_per_probe: int

    def __post_init__(self):
        object.__setattr__(self, "probes", tuple(self.probes))
        if not self.probes:
            raise ValueError("at least one probe required")
        if any(p != p.strip() or not p for p in self.probes):
            raise ValueError("probes must be non-empty and trimmed")
        if self.samples_per_probe < 1:
            raise ValueError("samples_per_probe must be positive")

    @classmethod
    def from_comma_separated(cls, text: str, params: GenerationParams,
                             samples_per_probe: int) -> "ProbeSpec":
        probes = tuple(p.strip() for p in text.split(",") if p.strip())
        return cls(probes=probes, params=params,
                   samples_per_probe=samples_per_probe)

    def canonical(self) -> str:
        return canonical_json({
            "probes": list(self.probes),
            "samples_per_probe": self.samples_per_probe,
            "temperature": self.params.temperature,
            "top_p": self.params.top_p,
            "max_tokens": self.params.max_tokens,
        })


@dataclass(frozen=True)
class TagDeviation:
    expected_pct: float
    observed_pct: float
    deviation_pct: float


@dataclass(frozen=True)
class DeviationReport:
    per_tag: dict[ProbTag, TagDeviation]
    max_abs_deviation_pct: float
    parse_failures: int
    total: int
    threshold_pct: float
    passed: bool
    unreliable: bool  # parse-failure rate above 50%

    def as_dict(self) -> dict:
        return {
            "per_tag": {
                tag.value: {
                    "expected_pct": d.expected_pct,
                    "observed_pct": d.observed_pct,
                    "deviation_pct": d.deviation_pct,
                }
                for tag, d in self.per_tag.items()
            },
            "max_abs_deviation_pct": self.max_abs_deviation_pct,
            "parse_failures": self.parse_failures,
            "total": self.total,
            "threshold_pct": self.threshold_pct,
            "passed": self.passed,
            "unreliable": self.unreliable,
        }


def _find_unescaped_close(text: str) -> int:
    i = 0
    while i < len(text) - 1:
        if text[i] == "\\":
            i += 2
            continue
        if text[i] == "]" and text[i + 1] == "]":
            return i
        i += 1
    return -1


def parse_generation(probe: str, generation: str) -> ProbTag | None:
    """Rebuild the corpus line a generation implies and pull out its tag."""
    full = f"[[text: {probe}{generation}"
    close = _find_unescaped_close(full)
    if close == -1:
        return None
    try:
        record = parse(full[:close + 2])
    except MetaParseError:
        return None
    return record.prob


def run_probes(spec: ProbeSpec, store: Store, completion_client,
               probe_run_id: str | None = None) -> str:
    """Request samples for every probe; store raw and parsed outcomes.

    Backend failures leave a partial run: already-collected rows are kept
    and remaining samples for that probe are skipped.
    """
    run_id = probe_run_id or uuid.uuid4().hex
    store.create_probe_run(run_id, spec.canonical())
    now = format_ts(dt.datetime.now(dt.timezone.utc))
    for probe in spec.probes:
        prompt = f"[[text: {probe}"
        remaining = spec.samples_per_probe
        chunk = 0
        while remaining > 0:
            batch = min(remaining, completion_client.sample_cap)
            params = dataclasses.replace(spec.params, sample_count=batch)
            try:
                generations = completion_client.complete(
                    prompt, params, chunk_tag=chunk if chunk > 0 else None)
            except PopscopeError:
                break
            rows = []
            for text in generations:
                tag = parse_generation(probe, text)
                rows.append(ProbeRow(
                    probe_run_id=run_id,
                    probe_text=probe,
                    generated_text=text,
                    parsed_ok=tag is not None,
                    prob_tag=tag.value if tag is not None else None,
                    created_at=now,
                ))
            store.add_probe_rows(rows)
            remaining -= batch
            chunk += 1
    return run_id


def tag_distribution(store: Store, probe_run_id: str) -> dict[ProbTag, int]:
    """Tag counts over successfully parsed rows; zeros included."""
    rows = store.probe_rows(probe_run_id)
    counts = {tag: 0 for tag in ProbTag}
    for row in rows:
        if row.parsed_ok:
            counts[ProbTag(row.prob_tag)] += 1
    return counts


def sanity_check(store: Store, probe_run_id: str,
                 threshold_pct: float = 5.0) -> DeviationReport:
    """Observed vs expected sentinel percentages over parsed generations."""
    rows = store.probe_rows(probe_run_id)
    parsed = [r for r in rows if r.parsed_ok]
    if not parsed:
        raise InsufficientDataError(
            f"probe run {probe_run_id!r} has no parsed generations")
    counts = {tag: 0 for tag in ProbTag}
    for row in parsed:
        counts[ProbTag(row.prob_tag)] += 1
    per_tag = {}
    max_abs = 0.0
    for tag in ProbTag:
        observed = 100.0 * counts[tag] / len(parsed)
        expected = TAG_EXPECTED_PCT[tag]
        deviation = observed - expected
        per_tag[tag] = TagDeviation(expected_pct=expected,
                                    observed_pct=observed,
                                    deviation_pct=deviation)
        max_abs = max(max_abs, abs(deviation))
    failures = len(rows) - len(parsed)
    report = DeviationReport(
        per_tag=per_tag,
        max_abs_deviation_pct=max_abs,
        parse_failures=failures,
        total=len(rows),
        threshold_pct=threshold_pct,
        passed=max_abs <= threshold_pct,
        unreliable=failures > UNRELIABLE_FAILURE_RATE * len(rows),
    )
    store.save_probe_report(probe_run_id, canonical_json(report.as_dict()))
    return report
