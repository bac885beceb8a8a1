from .canonical import BackendRequest, RequestKind, canonical_json
from .clients import (
    CompletionClient,
    EmbedClient,
    Endpoint,
    PageViewCountClient,
    PostCountClient,
    SearchClient,
)
from .fixtures import FixtureStore, Mode
from .transport import LiveTransport, PanicTransport, TokenBucket, Transport
from .types import CountSeries, GenerationParams

__all__ = [
    "BackendRequest",
    "RequestKind",
    "canonical_json",
    "CompletionClient",
    "EmbedClient",
    "Endpoint",
    "PageViewCountClient",
    "PostCountClient",
    "SearchClient",
    "FixtureStore",
    "Mode",
    "LiveTransport",
    "PanicTransport",
    "TokenBucket",
    "Transport",
    "CountSeries",
    "GenerationParams",
]
