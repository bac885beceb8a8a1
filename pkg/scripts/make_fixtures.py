#!/usr/bin/env python3
"""Regenerate the shipped replay fixtures and the frontend API payload fixtures.

Runs the real pipeline in record mode against the deterministic synthetic
backends in popscope.testing, so fixture digests always match whatever the
client code actually sends. Output is byte-stable across runs.

Usage: python scripts/make_fixtures.py
"""

from __future__ import annotations

import datetime as dt
import json
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from popscope.analytics.pipeline import embed_posts, recluster, run_projection
from popscope.analytics.dbscan import DbscanParams
from popscope.analytics.tsne import TsneParams
from popscope.backends.canonical import RequestKind
from popscope.backends.clients import (
    CompletionClient,
    EmbedClient,
    Endpoint,
    PostCountClient,
    SearchClient,
)
from popscope.backends.fixtures import FixtureStore, Mode
from popscope.backends.types import GenerationParams
from popscope.collector import (
    CollectFilter,
    CollectionJob,
    SamplingMode,
    SamplingPolicy,
    run_collection,
)
from popscope.keywords import build_prompt, parse_numbered_list
from popscope.probe import ProbeSpec, run_probes
from popscope.store import Store
from popscope.testing import (
    EXOTIC_PETS_TOPIC,
    InMemoryTransport,
    SynthWorld,
    VALIDATION_WINDOW,
)

RECORDED_AT = "2023-01-15T00:00:00Z"
FIXTURE_ROOT = REPO / "fixtures" / "replay"
FRONTEND_FIXTURES = REPO / "frontend" / "tests" / "fixtures"

SIX_VALIDATED = ["Monkeys", "Snakes", "Bats", "Alligators", "Tarantulas",
                 "Sugar Gliders"]
MODEL_TAG = "synth-emb-64"
RUN_ID = "blobrun"
PROBE_RUN_ID = "probe-fixture"

# Pipeline knobs shared with the end-to-end acceptance test.
DAY_CAP = 8
KEYWORD_CAP = 60
TSNE = dict(perplexity=30.0, iterations=400, seed=11)
PCA_K = 50
DBSCAN_MIN_PTS = 5


def build_record_clients(root: Path):
    fixtures = FixtureStore(root, recorded_at=RECORDED_AT)
    transport = InMemoryTransport(SynthWorld().handle)

    def endpoint(kind: RequestKind, name: str) -> Endpoint:
        return Endpoint(kind, name, f"synth://{name}", Mode.RECORD,
                        transport=transport, fixture_store=fixtures)

    return (
        CompletionClient(endpoint(RequestKind.COMPLETE, "completion")),
        EmbedClient(endpoint(RequestKind.EMBED, "embed")),
        PostCountClient(endpoint(RequestKind.COUNTS, "counts")),
        SearchClient(endpoint(RequestKind.SEARCH, "search")),
    )


def main() -> int:
    if FIXTURE_ROOT.exists():
        shutil.rmtree(FIXTURE_ROOT)
    FIXTURE_ROOT.mkdir(parents=True)
    FRONTEND_FIXTURES.mkdir(parents=True, exist_ok=True)

    completion, embed, counts, search = build_record_clients(FIXTURE_ROOT)
    start, end = VALIDATION_WINDOW

    # 1. keyword suggestion
    prompt = build_prompt(EXOTIC_PETS_TOPIC)
    texts = completion.complete(prompt, GenerationParams(sample_count=1))
    candidates = parse_numbered_list(texts[0], source_prompt=prompt)
    print(f"suggest: {len(candidates)} candidates")

    # 2. counts for every candidate (validation + collection planning)
    for cand in candidates:
        series = counts.counts(cand.surface, start, end)
        print(f"  counts {cand.surface}: {series.total}")

    # 3. collection into a scratch store
    workdir = Path(tempfile.mkdtemp(prefix="popscope-fixtures-"))
    store = Store(workdir / "store.db")
    job = CollectionJob(
        keywords=tuple(SIX_VALIDATED),
        start_day=start, end_day=end,
        filter=CollectFilter(language="en"),
        policy=SamplingPolicy(mode=SamplingMode.UNIFORM,
                              per_day_cap=DAY_CAP,
                              overall_cap_per_keyword=KEYWORD_CAP),
        seed=0,
    )
    stats = run_collection(job, counts, search, store)
    for kw, s in stats.per_keyword.items():
        print(f"  collect {kw}: stored {s.stored} dup {s.duplicates}")
    print(f"  posts total: {store.post_count()}")

    # 4. embeddings
    embedded = embed_posts(store, embed, MODEL_TAG, batch_size=64)
    print(f"  embedded {embedded}")

    # 5. projection + clustering (local compute; informs the pinned eps)
    coords = run_projection(store, RUN_ID, MODEL_TAG, PCA_K, TsneParams(**TSNE))
    span = float(coords.max() - coords.min())
    eps = round(0.05 * span, 3)
    assignment = recluster(store, RUN_ID, DbscanParams(eps=eps,
                                                       min_pts=DBSCAN_MIN_PTS))
    sizes = assignment.cluster_sizes()
    print(f"  projection span {span:.2f}, eps {eps} -> "
          f"{assignment.n_clusters} clusters, sizes {sizes}")

    # 6. probes
    spec = ProbeSpec.from_comma_separated(
        "Ivermectin, Paxlovid", GenerationParams(), samples_per_probe=50)
    run_probes(spec, store, completion, probe_run_id=PROBE_RUN_ID)
    rows = store.probe_rows(PROBE_RUN_ID)
    print(f"  probe rows: {len(rows)}, parsed {sum(r.parsed_ok for r in rows)}")
    store.close()

    # 7. frontend payload fixtures straight from the HTTP API
    from fastapi.testclient import TestClient

    from popscope.config import AppConfig
    from popscope.service import create_app

    config = AppConfig(store_path=str(workdir / "store.db"), mode=Mode.REPLAY,
                       fixture_dir=str(FIXTURE_ROOT))
    app = create_app(config)
    with TestClient(app) as client:
        def dump(name: str, payload):
            path = FRONTEND_FIXTURES / name
            path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                            encoding="utf-8")
            print(f"  wrote {path.relative_to(REPO)}")

        dump("suggest.json", client.post(
            "/api/keywords/suggest",
            json={"topic": EXOTIC_PETS_TOPIC, "samples": 1}).json())
        dump("validate.json", client.post(
            "/api/keywords/validate",
            json={"keywords": SIX_VALIDATED,
                  "from": start.isoformat(), "to": end.isoformat()}).json())
        dump("cluster.json", client.post(
            "/api/cluster", json={"run_id": RUN_ID, "eps": eps,
                                  "min_pts": DBSCAN_MIN_PTS}).json())
        dump("points_before.json",
             client.get(f"/api/projection/{RUN_ID}/points").json())
        dump("exclude.json", client.post(
            "/api/exclude", json={"run_id": RUN_ID, "clusters": [1],
                                  "excluded": True}).json())
        dump("points_after_exclude.json",
             client.get(f"/api/projection/{RUN_ID}/points").json())
        dump("probe_report.json", client.get(
            f"/api/probe/{PROBE_RUN_ID}/report", params={"threshold": 5.0}).json())
        # restore stored state (fixtures capture the excluded view above)
        client.post("/api/exclude", json={"run_id": RUN_ID, "clusters": [1],
                                          "excluded": False})

    n_files = sum(1 for _ in FIXTURE_ROOT.rglob("*.json"))
    print(f"fixture files: {n_files} under {FIXTURE_ROOT.relative_to(REPO)}")
    shutil.rmtree(workdir)
    return 0


if __name__ == "__main__":
    sys.exit(main())
