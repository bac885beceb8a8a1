"""Canonical request serialization and digests.

Fixture files are keyed by a SHA-256 of the canonical form, so two payloads
that differ only in key order (or in dict insertion history) must serialize
to identical bytes.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from enum import Enum
from typing import Any


class RequestKind(str, Enum):
    COMPLETE = "complete"
    EMBED = "embed"
    COUNTS = "counts"
    SEARCH = "search"


@dataclass(frozen=True)
class BackendRequest:
    kind: RequestKind
    endpoint_id: str
    payload: Any  # JSON-serializable; dicts are canonicalized recursively

    def canonical_bytes(self) -> bytes:
        doc = {
            "kind": self.kind.value,
            "endpoint_id": self.endpoint_id,
            "payload": self.payload,
        }
        return canonical_json(doc).encode("utf-8")

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_bytes()).hexdigest()


def canonical_json(value: Any) -> str:
    """Serialize with sorted keys and no incidental whitespace.

    Equal payloads produce byte-identical output regardless of how their
    dicts were built.
    """
    return json.dumps(
        value, sort_keys=True, separators=(",", ":"), ensure_ascii=False
    )
