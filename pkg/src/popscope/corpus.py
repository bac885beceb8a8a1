"""The meta-wrapped corpus format and train/test emission.

One record per line: ``[[text: ... || created: ... || location: ... ||
probability: ...]]``. Field order is fixed, location is optional, and the
probability sentinel is drawn at known frequencies so a fine-tuned model's
outputs reveal whether it converged.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .backends.canonical import canonical_json
from .errors import InsufficientDataError, PopscopeError
from .store import Store


class ProbTag(str, Enum):
    TEN = "ten"
    TWENTY = "twenty"
    THIRTY = "thirty"
    FORTY = "forty"


# Target frequency of each tag is its numeric value in percent.
TAG_WEIGHTS = {ProbTag.TEN: 0.10, ProbTag.TWENTY: 0.20,
               ProbTag.THIRTY: 0.30, ProbTag.FORTY: 0.40}
TAG_EXPECTED_PCT = {ProbTag.TEN: 10.0, ProbTag.TWENTY: 20.0,
                    ProbTag.THIRTY: 30.0, ProbTag.FORTY: 40.0}

_TAG_ORDER = (ProbTag.TEN, ProbTag.TWENTY, ProbTag.THIRTY, ProbTag.FORTY)

TIMESTAMP_FORMAT = "%Y-%m-%d %H:%M:%S"

# \n and \r are escaped beyond the separator set so that rendering stays
# total: no text can smuggle a raw newline into a one-record-per-line file.
_ESCAPES = {"\\": "\\\\", "|": "\\|", "[": "\\[", "]": "\\]",
            "\n": "\\n", "\r": "\\r"}
_UNESCAPES = {"\\": "\\", "|": "|", "[": "[", "]": "]", "n": "\n", "r": "\r"}


@dataclass(frozen=True)
class MetaRecord:
    text: str
    created: str  # "YYYY-MM-DD HH:MM:SS"
    location: str | None
    prob: ProbTag

    def __post_init__(self):
        if not self.text:
            raise ValueError("text must be non-empty")
        try:
            dt.datetime.strptime(self.created, TIMESTAMP_FORMAT)
        except ValueError as exc:
            raise ValueError(f"malformed created timestamp: {self.created!r}") from exc


class MetaParseError(PopscopeError):
    """Base for parse failures; ``offset`` is a byte offset into the line."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class MalformedWrapper(MetaParseError):
    pass


class UnknownKey(MetaParseError):
    def __init__(self, key: str, offset: int):
        super().__init__(f"unknown element key {key!r}", offset)
        self.key = key


class MissingField(MetaParseError):
    def __init__(self, field: str, offset: int):
        super().__init__(f"missing required field {field!r}", offset)
        self.field = field


class BadTimestamp(MetaParseError):
    pass


class BadProbTag(MetaParseError):
    pass


def escape_text(text: str) -> str:
    return "".join(_ESCAPES.get(ch, ch) for ch in text)


def _byte_offset(line: str, index: int) -> int:
    return len(line[:index].encode("utf-8"))


def render(record: MetaRecord) -> str:
    """One line, byte-exact: fixed field order, `` || `` separators."""
    parts = [f"text: {escape_text(record.text)}",
             f"created: {record.created}"]
    if record.location is not None:
        parts.append(f"location: {escape_text(record.location)}")
    parts.append(f"probability: {record.prob.value}")
    return "[[" + " || ".join(parts) + "]]"


def _scan_elements(line: str) -> list[tuple[str, int]]:
    """Split the wrapped body into unescaped elements with their offsets."""
    if not line.startswith("[["):
        raise MalformedWrapper("record must start with '[['", 0)
    elements: list[tuple[str, int]] = []
    buffer: list[str] = []
    element_start = 2
    i = 2
    end = len(line)
    while True:
        if i >= end:
            raise MalformedWrapper("record does not end with ']]'",
                                   _byte_offset(line, end))
        ch = line[i]
        if ch == "\\":
            if i + 1 >= end or line[i + 1] not in _UNESCAPES:
                raise MalformedWrapper("bad escape sequence", _byte_offset(line, i))
            buffer.append(_UNESCAPES[line[i + 1]])
            i += 2
            continue
        if ch == "|":
            # Only legal as the ` || ` separator.
            if (line[i:i + 2] == "||" and buffer and buffer[-1] == " "
                    and i + 2 < end and line[i + 2] == " "):
                elements.append(("".join(buffer[:-1]), element_start))
                buffer = []
                i += 3
                element_start = i
                continue
            raise MalformedWrapper("stray '|' outside separator",
                                   _byte_offset(line, i))
        if ch == "]":
            if line[i:i + 2] == "]]":
                if i + 2 != end:
                    raise MalformedWrapper("content after closing ']]'",
                                           _byte_offset(line, i + 2))
                elements.append(("".join(buffer), element_start))
                return elements
            raise MalformedWrapper("stray ']' outside wrapper",
                                   _byte_offset(line, i))
        if ch == "[":
            raise MalformedWrapper("stray '[' inside record",
                                   _byte_offset(line, i))
        buffer.append(ch)
        i += 1


_FIELD_ORDER = ("text", "created", "location", "probability")
_REQUIRED = ("text", "created", "probability")


def parse(line: str) -> MetaRecord:
    """Inverse of render on its image; strict about order, keys, and shape."""
    elements = _scan_elements(line)
    fields: dict[str, tuple[str, int]] = {}
    cursor = 0
    for raw, offset in elements:
        key, sep, value = raw.partition(": ")
        if not sep or key not in _FIELD_ORDER:
            shown = key if not sep else key
            raise UnknownKey(shown, _byte_offset(line, offset))
        position = _FIELD_ORDER.index(key)
        if position < cursor:
            raise MalformedWrapper(f"element {key!r} out of order",
                                   _byte_offset(line, offset))
        if key in fields:
            raise MalformedWrapper(f"duplicate element {key!r}",
                                   _byte_offset(line, offset))
        cursor = position + 1
        fields[key] = (value, offset)

    tail = _byte_offset(line, len(line))
    for required in _REQUIRED:
        if required not in fields:
            raise MissingField(required, tail)

    text, text_offset = fields["text"]
    if not text:
        raise MalformedWrapper("empty text element",
                               _byte_offset(line, text_offset))
    created, created_offset = fields["created"]
    try:
        dt.datetime.strptime(created, TIMESTAMP_FORMAT)
    except ValueError:
        raise BadTimestamp(f"bad timestamp {created!r}",
                           _byte_offset(line, created_offset)) from None
    prob_raw, prob_offset = fields["probability"]
    try:
        prob = ProbTag(prob_raw)
    except ValueError:
        raise BadProbTag(f"bad probability tag {prob_raw!r}",
                         _byte_offset(line, prob_offset)) from None
    location = fields["location"][0] if "location" in fields else None
    return MetaRecord(text=text, created=created, location=location, prob=prob)


def assign_prob_tags(n: int, seed: int) -> list[ProbTag]:
    """n i.i.d. categorical draws at weights (0.10, 0.20, 0.30, 0.40)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return []
    rng = np.random.default_rng(seed)
    weights = [TAG_WEIGHTS[t] for t in _TAG_ORDER]
    picks = rng.choice(len(_TAG_ORDER), size=n, p=weights)
    return [_TAG_ORDER[i] for i in picks]


@dataclass(frozen=True)
class CorpusSpec:
    run_id: str
    include_location: bool
    train_fraction: float
    seed: int
    output_dir: str

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must be in (0, 1)")
        if self.seed < 0:
            raise ValueError("seed must be unsigned")

    def canonical(self) -> str:
        return canonical_json({
            "run_id": self.run_id,
            "include_location": self.include_location,
            "train_fraction": self.train_fraction,
            "seed": self.seed,
        })

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode("utf-8")).hexdigest()


def _format_location(geo: str) -> str:
    parts = geo.split(",")
    if len(parts) == 2:
        try:
            lat, lon = float(parts[0]), float(parts[1])
            return f"{lat:.4f},{lon:.4f}"
        except ValueError:
            pass
    return geo


def _floor_split(n: int, fraction: float) -> int:
    # floor of the intended decimal product, shielded from float dust
    return math.floor(round(n * fraction, 9))


def _tag_frequencies(tags: list[ProbTag]) -> dict[str, int]:
    freq = {t.value: 0 for t in _TAG_ORDER}
    for tag in tags:
        freq[tag.value] += 1
    return freq


def build_corpus(spec: CorpusSpec, store: Store,
                 include_noise: bool = False) -> dict:
    """Render candidates, shuffle by seed, split, and write the corpus files.

    Output is byte-deterministic for a fixed spec and store contents:
    `train.txt`, `test.txt` (UTF-8, LF) plus `manifest.json`.
    """
    candidates = store.corpus_candidates(spec.run_id, include_noise=include_noise)
    if not candidates:
        raise InsufficientDataError(
            f"no corpus candidates for run {spec.run_id!r}")

    seed_tags, seed_shuffle = (
        int(s) for s in np.random.SeedSequence(spec.seed).generate_state(2))
    tags = assign_prob_tags(len(candidates), seed_tags)
    lines = []
    for post, tag in zip(candidates, tags):
        location = None
        if spec.include_location and post.geo:
            location = _format_location(post.geo)
        record = MetaRecord(
            text=post.text,
            created=post.created_at.strftime(TIMESTAMP_FORMAT),
            location=location,
            prob=tag,
        )
        lines.append(render(record))

    order = np.random.default_rng(seed_shuffle).permutation(len(lines))
    shuffled = [lines[i] for i in order]
    shuffled_tags = [tags[i] for i in order]
    n_train = _floor_split(len(shuffled), spec.train_fraction)
    train, test = shuffled[:n_train], shuffled[n_train:]

    out_dir = Path(spec.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_path = out_dir / "train.txt"
    test_path = out_dir / "test.txt"
    train_path.write_text("\n".join(train) + ("\n" if train else ""),
                          encoding="utf-8", newline="\n")
    test_path.write_text("\n".join(test) + ("\n" if test else ""),
                         encoding="utf-8", newline="\n")

    manifest = {
        "run_id": spec.run_id,
        "spec_hash": spec.digest(),
        "seed": spec.seed,
        "train_fraction": spec.train_fraction,
        "include_location": spec.include_location,
        "include_noise": include_noise,
        "total_records": len(shuffled),
        "train_records": len(train),
        "test_records": len(test),
        "tag_frequencies": {
            "train": _tag_frequencies(shuffled_tags[:n_train]),
            "test": _tag_frequencies(shuffled_tags[n_train:]),
        },
        "prob_tag_scheme": "one categorical draw per line at weights 10/20/30/40",
    }
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n",
                             encoding="utf-8", newline="\n")

    store.record_corpus_export(
        export_id=spec.digest()[:16],
        run_id=spec.run_id,
        spec_json=spec.canonical(),
        manifest_json=canonical_json(manifest),
    )
    return {"train_path": str(train_path), "test_path": str(test_path),
            "manifest_path": str(manifest_path), "manifest": manifest}
