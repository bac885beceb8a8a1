"""Application configuration and backend client wiring.

Endpoints and mode come from env vars (optionally a JSON config file for
non-secret keys); credentials come only from the environment so fixture
directories stay shareable.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .backends.clients import (
    CompletionClient,
    EmbedClient,
    Endpoint,
    PageViewCountClient,
    PostCountClient,
    SearchClient,
)
from .backends.canonical import RequestKind
from .backends.fixtures import FixtureStore, Mode
from .backends.transport import LiveTransport, PanicTransport, TokenBucket
from .backends.types import SAMPLE_COUNT_CAP
from .errors import ConfigError

ENV_PREFIX = "POPSCOPE_"

# Config file keys (all optional); POPSCOPE_API_KEY is env-only by design.
FILE_KEYS = {
    "store_path", "completion_url", "embed_url", "counts_url", "search_url",
    "mode", "fixture_dir", "rate_limit_rps", "ui_port", "counts_source",
    "sample_cap", "static_dir",
}


@dataclass
class AppConfig:
    store_path: str = "popscope.db"
    completion_url: str = ""
    embed_url: str = ""
    counts_url: str = ""
    search_url: str = ""
    api_key: str | None = None
    mode: Mode = Mode.REPLAY
    fixture_dir: str = "fixtures/replay"
    rate_limit_rps: float = 1.0
    ui_port: int = 8765
    counts_source: str = "posts"  # or "pageviews"
    sample_cap: int = SAMPLE_COUNT_CAP
    static_dir: str | None = None

    def __post_init__(self):
        if not 1024 <= self.ui_port <= 65535:
            raise ConfigError(f"ui_port {self.ui_port} outside [1024, 65535]")
        if self.counts_source not in ("posts", "pageviews"):
            raise ConfigError(f"unknown counts_source {self.counts_source!r}")
        if self.rate_limit_rps <= 0:
            raise ConfigError("rate_limit_rps must be positive")


def load_config(config_file: str | None = None,
                overrides: dict | None = None) -> AppConfig:
    """Merge defaults <- config file <- env vars <- explicit overrides."""
    values: dict = {}
    if config_file:
        path = Path(config_file)
        if not path.exists():
            raise ConfigError(f"config file not found: {config_file}")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad config file {config_file}: {exc}") from exc
        unknown = set(doc) - FILE_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        values.update(doc)

    env = os.environ
    for key, name in [
        ("completion_url", "COMPLETION_URL"), ("embed_url", "EMBED_URL"),
        ("counts_url", "COUNTS_URL"), ("search_url", "SEARCH_URL"),
        ("api_key", "API_KEY"), ("mode", "MODE"),
        ("fixture_dir", "FIXTURE_DIR"), ("store_path", "STORE"),
    ]:
        raw = env.get(ENV_PREFIX + name)
        if raw:
            values[key] = raw
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})

    if "mode" in values and not isinstance(values["mode"], Mode):
        try:
            values["mode"] = Mode(str(values["mode"]).lower())
        except ValueError:
            raise ConfigError(
                f"mode must be live, record or replay; got {values['mode']!r}")
    return AppConfig(**values)


@dataclass
class Clients:
    completion: CompletionClient
    embed: EmbedClient
    counts: PostCountClient | PageViewCountClient
    search: SearchClient
    mode: Mode = field(default=Mode.REPLAY)


def build_clients(config: AppConfig, transport=None) -> Clients:
    """Instantiate the four clients for the configured mode.

    In replay mode the transport is a panic stub: any attempt to touch the
    network is a bug, not a fallback.
    """
    fixtures = FixtureStore(config.fixture_dir)
    if transport is None:
        transport = (PanicTransport() if config.mode is Mode.REPLAY
                     else LiveTransport())
    needs_limiter = config.mode in (Mode.LIVE, Mode.RECORD)

    def endpoint(kind: RequestKind, endpoint_id: str, url: str) -> Endpoint:
        return Endpoint(
            kind, endpoint_id, url, config.mode,
            transport=transport,
            fixture_store=fixtures,
            api_key=config.api_key,
            limiter=TokenBucket(config.rate_limit_rps) if needs_limiter else None,
        )

    counts_endpoint = endpoint(RequestKind.COUNTS, "counts", config.counts_url)
    counts_client = (PostCountClient(counts_endpoint)
                     if config.counts_source == "posts"
                     else PageViewCountClient(counts_endpoint))
    return Clients(
        completion=CompletionClient(
            endpoint(RequestKind.COMPLETE, "completion", config.completion_url),
            sample_cap=config.sample_cap),
        embed=EmbedClient(endpoint(RequestKind.EMBED, "embed", config.embed_url)),
        counts=counts_client,
        search=SearchClient(endpoint(RequestKind.SEARCH, "search", config.search_url)),
        mode=config.mode,
    )
