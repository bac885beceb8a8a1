"""Record/replay fixtures for the four backend endpoints.

Layout on disk: one directory per endpoint, one ``<digest>.json`` file per
recorded request, containing ``{request, response, recorded_at}``.
"""

from __future__ import annotations

import json
import time
from enum import Enum
from pathlib import Path
from typing import Any

from ..errors import FixtureMissError
from .canonical import BackendRequest, canonical_json


class Mode(str, Enum):
    LIVE = "live"
    RECORD = "record"
    REPLAY = "replay"


class FixtureStore:
    """Digest-keyed response store backing Record and Replay modes.

    Replay is read-only; a digest miss raises, never falls through to the
    network. Record is single-writer: last write for a digest wins.
    """

    def __init__(self, root: str | Path, recorded_at: str | None = None):
        self.root = Path(root)
        self.recorded_at = recorded_at  # pin for byte-stable fixture files

    def path_for(self, request: BackendRequest) -> Path:
        return self.root / request.endpoint_id / f"{request.digest()}.json"

    def lookup(self, request: BackendRequest) -> Any:
        path = self.path_for(request)
        if not path.exists():
            raise FixtureMissError(request.endpoint_id, request.digest())
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)["response"]

    def record(self, request: BackendRequest, response: Any, recorded_at: str | None = None) -> Path:
        path = self.path_for(request)
        path.parent.mkdir(parents=True, exist_ok=True)
        entry = {
            "request": {
                "kind": request.kind.value,
                "endpoint_id": request.endpoint_id,
                "payload": request.payload,
            },
            "response": response,
            "recorded_at": recorded_at or self.recorded_at
            or time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        }
        path.write_text(canonical_json(entry) + "\n", encoding="utf-8")
        return path
