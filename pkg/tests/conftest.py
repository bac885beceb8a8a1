import datetime as dt
from pathlib import Path

import pytest

from popscope.backends.canonical import RequestKind
from popscope.backends.clients import (
    CompletionClient,
    EmbedClient,
    Endpoint,
    PostCountClient,
    SearchClient,
)
from popscope.backends.fixtures import FixtureStore, Mode
from popscope.backends.transport import PanicTransport
from popscope.collector import Post
from popscope.store import Store

REPO = Path(__file__).resolve().parent.parent
REPLAY_FIXTURES = REPO / "fixtures" / "replay"
DATA = Path(__file__).resolve().parent / "data"

UTC = dt.timezone.utc


@pytest.fixture
def store(tmp_path):
    with Store(tmp_path / "store.db") as s:
        yield s


def replay_endpoint(kind: RequestKind, name: str,
                    root: Path = REPLAY_FIXTURES) -> Endpoint:
    """Replay-mode endpoint over the shipped fixtures; panics on network use."""
    return Endpoint(kind, name, f"synth://{name}", Mode.REPLAY,
                    transport=PanicTransport(), fixture_store=FixtureStore(root))


@pytest.fixture
def replay_completion():
    return CompletionClient(replay_endpoint(RequestKind.COMPLETE, "completion"))


@pytest.fixture
def replay_embed():
    return EmbedClient(replay_endpoint(RequestKind.EMBED, "embed"))


@pytest.fixture
def replay_counts():
    return PostCountClient(replay_endpoint(RequestKind.COUNTS, "counts"))


@pytest.fixture
def replay_search():
    return SearchClient(replay_endpoint(RequestKind.SEARCH, "search"))


def make_post(post_id: str, *, text: str | None = None,
              created: str = "2022-12-20 12:00:00", author: str = "author-1",
              lang: str = "en", geo: str | None = None,
              keyword: str = "Monkeys") -> Post:
    created_dt = dt.datetime.strptime(created, "%Y-%m-%d %H:%M:%S").replace(tzinfo=UTC)
    return Post(post_id=post_id, text=text or f"post body {post_id}",
                created_at=created_dt, author_id=author, lang=lang, geo=geo,
                keyword=keyword)
