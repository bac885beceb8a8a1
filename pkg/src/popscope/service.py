"""Local HTTP API mirroring the CLI, consumed by the web UI.

Every endpoint is a thin adapter over the same library calls the CLI
uses. Long operations (collection, embedding, projection, probing) run as
named jobs, one writer at a time, polled via /api/jobs/:id.
"""

from __future__ import annotations

import datetime as dt
import queue
import threading
import uuid
from pathlib import Path
from typing import Any, Callable

from fastapi import Body, FastAPI
from fastapi.responses import JSONResponse

from . import __version__
from .analytics.dbscan import DbscanParams
from .analytics.pipeline import (
    DEFAULT_PCA_K,
    embed_posts,
    recluster,
    run_projection,
    set_excluded,
)
from .analytics.tsne import TsneParams
from .backends.types import GenerationParams
from .collector import (
    CollectFilter,
    CollectionJob,
    SamplingMode,
    SamplingPolicy,
    run_collection,
)
from .config import AppConfig, build_clients
from .corpus import CorpusSpec, build_corpus
from .errors import NotFoundError, PopscopeError
from .keywords import KeywordCandidate, build_prompt, context_urls, \
    parse_numbered_list, validate_keywords
from .probe import ProbeSpec, run_probes, sanity_check, tag_distribution
from .store import Store


class JobRunner:
    """Executes submitted jobs sequentially on one worker thread."""

    def __init__(self):
        self.jobs: dict[str, dict] = {}
        self._queue: queue.Queue = queue.Queue()
        self._lock = threading.Lock()
        self._worker = threading.Thread(target=self._run, daemon=True)
        self._worker.start()

    def submit(self, kind: str, fn: Callable[[], Any]) -> str:
        job_id = uuid.uuid4().hex[:12]
        with self._lock:
            self.jobs[job_id] = {
                "id": job_id, "kind": kind, "status": "queued",
                "result": None, "error": None,
                "created_at": dt.datetime.now(dt.timezone.utc).isoformat(),
            }
        self._queue.put((job_id, fn))
        return job_id

    def get(self, job_id: str) -> dict:
        with self._lock:
            job = self.jobs.get(job_id)
            if job is None:
                raise NotFoundError(f"unknown job {job_id!r}")
            return dict(job)

    def _run(self):
        while True:
            job_id, fn = self._queue.get()
            with self._lock:
                self.jobs[job_id]["status"] = "running"
            try:
                result = fn()
                with self._lock:
                    self.jobs[job_id].update(status="succeeded", result=result)
            except Exception as exc:  # surfaced via polling, not raised
                with self._lock:
                    self.jobs[job_id].update(status="failed", error=str(exc))


def _candidate_count(store: Store, run_id: str) -> int:
    return len(store.corpus_candidates(run_id, include_noise=False))


def _points_payload(store: Store, run_id: str) -> dict:
    rows = store.projection_rows(run_id)
    texts = {}
    for row in rows:
        post = store.get_post(row.post_id)
        texts[row.post_id] = post.text if post else ""
    sizes: dict[int, int] = {}
    excluded_labels = set()
    for row in rows:
        label = -1 if row.cluster_label is None else row.cluster_label
        sizes[label] = sizes.get(label, 0) + 1
        if row.excluded and row.cluster_label is not None:
            excluded_labels.add(row.cluster_label)
    return {
        "run_id": run_id,
        "points": [
            {
                "post_id": r.post_id,
                "x": r.x,
                "y": r.y,
                "label": -1 if r.cluster_label is None else r.cluster_label,
                "excluded": r.excluded,
                "text": texts[r.post_id],
            }
            for r in rows
        ],
        "cluster_sizes": {str(k): v for k, v in sorted(sizes.items())},
        "excluded_labels": sorted(excluded_labels),
        "candidate_count": _candidate_count(store, run_id),
    }


def create_app(config: AppConfig, static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="popscope", version=__version__)
    store = Store(config.store_path)
    clients = build_clients(config)
    jobs = JobRunner()
    app.state.store = store
    app.state.config = config

    @app.exception_handler(NotFoundError)
    async def not_found(request, exc):
        return JSONResponse(status_code=404, content={"error": str(exc)})

    @app.exception_handler(PopscopeError)
    async def domain_error(request, exc):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(ValueError)
    async def value_error(request, exc):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.get("/api/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.get("/api/jobs/{job_id}")
    def job_status(job_id: str):
        return jobs.get(job_id)

    @app.post("/api/keywords/suggest")
    def keywords_suggest(body: dict = Body(...)):
        topic = body.get("topic", "")
        samples = int(body.get("samples", 1))
        prompt = build_prompt(topic)
        completions = clients.completion.complete(
            prompt, GenerationParams(sample_count=samples))
        candidates, seen, warnings = [], set(), 0
        for completion in completions:
            parsed = parse_numbered_list(completion, source_prompt=prompt)
            if not parsed:
                warnings += 1
            for cand in parsed:
                if cand.surface.casefold() in seen:
                    continue
                seen.add(cand.surface.casefold())
                candidates.append(cand)
        return {
            "prompt": prompt,
            "candidates": [{"surface": c.surface, "ordinal": c.ordinal}
                           for c in candidates],
            "unparsed_completions": warnings,
        }

    @app.post("/api/keywords/validate")
    def keywords_validate(body: dict = Body(...)):
        words = body.get("keywords") or []
        if not words:
            raise ValueError("keywords must be a non-empty list")
        start = dt.date.fromisoformat(body["from"])
        end = dt.date.fromisoformat(body["to"])
        candidates = [KeywordCandidate(surface=w, ordinal=i + 1)
                      for i, w in enumerate(words)]
        reports = validate_keywords(candidates, start, end, clients.counts)
        return {
            "window": {"from": start.isoformat(), "to": end.isoformat()},
            "reports": [
                {
                    "keyword": r.candidate.surface,
                    "ordinal": r.candidate.ordinal,
                    "total": r.total,
                    "daily": ([[d.isoformat(), c] for d, c in r.series.daily]
                              if r.series else None),
                    "context_urls": [
                        [d.isoformat(), url]
                        for d, url in context_urls(r.candidate, start, end)
                    ],
                }
                for r in reports
            ],
        }

    @app.post("/api/collect")
    def collect(body: dict = Body(...)):
        job = CollectionJob(
            keywords=tuple(body["keywords"]),
            start_day=dt.date.fromisoformat(body["from"]),
            end_day=dt.date.fromisoformat(body["to"]),
            filter=CollectFilter(
                language=body.get("lang"),
                location=body.get("location"),
                exclude_reposts=bool(body.get("exclude_reposts", False))),
            policy=SamplingPolicy(
                mode=SamplingMode(body.get("mode", "uniform")),
                per_day_cap=int(body["day_cap"]),
                overall_cap_per_keyword=int(body["keyword_cap"])),
            seed=int(body.get("seed", 0)),
        )
        job_id = jobs.submit(
            "collect",
            lambda: run_collection(job, clients.counts, clients.search,
                                   store).as_dict())
        return {"job_id": job_id}

    @app.post("/api/embed")
    def embed(body: dict = Body(...)):
        model_tag = body["model_tag"]
        batch_size = int(body.get("batch_size", 64))
        job_id = jobs.submit(
            "embed",
            lambda: {"embedded": embed_posts(store, clients.embed, model_tag,
                                             batch_size)})
        return {"job_id": job_id}

    @app.post("/api/projection/run")
    def projection_run(body: dict = Body(...)):
        run_id = body["run_id"]
        model_tag = body["model_tag"]
        pca_k = int(body.get("pca_k", DEFAULT_PCA_K))
        params = TsneParams(
            perplexity=float(body.get("perplexity", 30.0)),
            learning_rate=float(body.get("learning_rate", 200.0)),
            iterations=int(body.get("iterations", 1000)),
            seed=int(body.get("seed", 0)),
        )
        job_id = jobs.submit(
            "projection",
            lambda: {"run_id": run_id,
                     "points": len(run_projection(store, run_id, model_tag,
                                                  pca_k, params))})
        return {"job_id": job_id}

    @app.get("/api/projection/{run_id}/points")
    def projection_points(run_id: str):
        return _points_payload(store, run_id)

    @app.post("/api/cluster")
    def cluster(body: dict = Body(...)):
        run_id = body["run_id"]
        params = DbscanParams(eps=float(body["eps"]),
                              min_pts=int(body["min_pts"]))
        assignment = recluster(store, run_id, params)
        sizes = assignment.cluster_sizes()
        return {
            "run_id": run_id,
            "labels": list(assignment.labels),
            "n_clusters": assignment.n_clusters,
            "cluster_sizes": {str(k): v for k, v in sorted(sizes.items())},
            "candidate_count": _candidate_count(store, run_id),
        }

    @app.post("/api/exclude")
    def exclude(body: dict = Body(...)):
        run_id = body["run_id"]
        labels = [int(v) for v in body["clusters"]]
        excluded = bool(body.get("excluded", True))
        updated = set_excluded(store, run_id, labels, excluded)
        return {
            "run_id": run_id,
            "updated": updated,
            "excluded": excluded,
            "candidate_count": _candidate_count(store, run_id),
        }

    @app.post("/api/corpus/build")
    def corpus_build(body: dict = Body(...)):
        spec = CorpusSpec(
            run_id=body["run_id"],
            include_location=bool(body.get("include_location", False)),
            train_fraction=float(body.get("train_fraction", 0.8)),
            seed=int(body.get("seed", 0)),
            output_dir=body["output_dir"],
        )
        return build_corpus(spec, store,
                            include_noise=bool(body.get("include_noise", False)))

    @app.post("/api/probe/run")
    def probe_run(body: dict = Body(...)):
        probes = body["probes"]
        if isinstance(probes, list):
            probes = ", ".join(probes)
        params = GenerationParams(
            temperature=float(body.get("temperature", 0.7)),
            top_p=float(body.get("top_p", 1.0)),
            max_tokens=int(body.get("max_tokens", 256)),
        )
        spec = ProbeSpec.from_comma_separated(
            probes, params, int(body.get("samples", 100)))
        requested_id = body.get("run_id")

        def run():
            run_id = run_probes(spec, store, clients.completion,
                                probe_run_id=requested_id)
            rows = store.probe_rows(run_id)
            return {"probe_run_id": run_id, "rows": len(rows),
                    "parsed": sum(1 for r in rows if r.parsed_ok)}

        return {"job_id": jobs.submit("probe", run)}

    @app.get("/api/probe/{probe_run_id}/report")
    def probe_report(probe_run_id: str, threshold: float = 5.0):
        report = sanity_check(store, probe_run_id, threshold_pct=threshold)
        payload = report.as_dict()
        payload["probe_run_id"] = probe_run_id
        payload["distribution"] = {
            t.value: c for t, c in tag_distribution(store, probe_run_id).items()}
        return payload

    if static_dir and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True),
                  name="ui")

    return app
