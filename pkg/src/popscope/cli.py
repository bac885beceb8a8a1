"""popscope command line: every pipeline stage as a subcommand.

Exit codes: 0 success, 1 domain error, 2 usage error (argparse's own).
``--json`` switches all output to machine-readable JSON on stdout.
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import sys
from pathlib import Path

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
from .config import AppConfig, Clients, build_clients, load_config
from .corpus import CorpusSpec, build_corpus
from .errors import PopscopeError
from .keywords import (
    KeywordCandidate,
    build_prompt,
    context_urls,
    parse_numbered_list,
    validate_keywords,
)
from .probe import ProbeSpec, run_probes, sanity_check, tag_distribution
from .store import Store

DEFAULT_VALIDATION_DAYS_BACK = 10  # trailing window when --from/--to omitted


def _date(text: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad date {text!r}, expected YYYY-MM-DD")


def _positive_float(name: str):
    def parse(text: str) -> float:
        try:
            value = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number")
        if value <= 0:
            raise argparse.ArgumentTypeError(f"{name} must be positive")
        return value
    return parse


def _positive_int(name: str):
    def parse(text: str) -> int:
        try:
            value = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be an integer")
        if value < 1:
            raise argparse.ArgumentTypeError(f"{name} must be >= 1")
        return value
    return parse


def _fraction(name: str):
    def parse(text: str) -> float:
        try:
            value = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number")
        if not 0 < value < 1:
            raise argparse.ArgumentTypeError(f"{name} must be in (0, 1)")
        return value
    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="popscope",
        description="Keyword discovery, post collection, embedding refinement, "
                    "and fine-tuning corpus tooling.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--store", help="path to the sqlite store")
    parser.add_argument("--json", action="store_true", dest="as_json",
                        help="machine-readable output")
    sub = parser.add_subparsers(dest="command", required=True)

    kw = sub.add_parser("keywords", help="suggest and validate keywords")
    kw_sub = kw.add_subparsers(dest="subcommand", required=True)
    suggest = kw_sub.add_parser("suggest", help="prompt the completion backend")
    suggest.add_argument("--topic", required=True)
    suggest.add_argument("--samples", type=_positive_int("samples"), default=1)
    suggest.add_argument("--out", help="write one keyword per line to this file")
    validate = kw_sub.add_parser("validate", help="rank candidates by usage counts")
    validate.add_argument("--from", dest="from_day", type=_date)
    validate.add_argument("--to", dest="to_day", type=_date)
    validate.add_argument("--in", dest="infile", required=True,
                          help="candidate file, one keyword per line")
    validate.add_argument("--urls", action="store_true",
                          help="also emit per-day context URLs")

    collect = sub.add_parser("collect", help="collect posts for validated keywords")
    collect.add_argument("--keywords", required=True, help="keyword file")
    collect.add_argument("--from", dest="from_day", type=_date, required=True)
    collect.add_argument("--to", dest="to_day", type=_date, required=True)
    collect.add_argument("--mode", choices=["uniform", "proportional"],
                         default="uniform")
    collect.add_argument("--day-cap", type=_positive_int("day-cap"), required=True)
    collect.add_argument("--keyword-cap", type=_positive_int("keyword-cap"),
                         required=True)
    collect.add_argument("--lang")
    collect.add_argument("--location")
    collect.add_argument("--no-reposts", action="store_true")
    collect.add_argument("--seed", type=int, default=0)
    collect.add_argument("--report", help="write the stats report to this file")

    embed = sub.add_parser("embed", help="embed stored posts")
    embed.add_argument("--model-tag", required=True)
    embed.add_argument("--batch-size", type=_positive_int("batch-size"), default=64)

    project = sub.add_parser("project", help="PCA + t-SNE projection to 2-D")
    project.add_argument("--run", required=True)
    project.add_argument("--model-tag", required=True)
    project.add_argument("--pca-k", type=_positive_int("pca-k"), default=DEFAULT_PCA_K)
    project.add_argument("--perplexity", type=_positive_float("perplexity"),
                         default=30.0)
    project.add_argument("--learning-rate", type=_positive_float("learning-rate"),
                         default=200.0)
    project.add_argument("--iterations", type=_positive_int("iterations"),
                         default=1000)
    project.add_argument("--seed", type=int, default=0)

    cluster = sub.add_parser("cluster", help="DBSCAN over a projection run")
    cluster.add_argument("--run", required=True)
    cluster.add_argument("--eps", type=_positive_float("eps"), required=True)
    cluster.add_argument("--min-pts", type=_positive_int("min-pts"), required=True)

    exclude = sub.add_parser("exclude", help="mark clusters excluded (or undo)")
    exclude.add_argument("--run", required=True)
    exclude.add_argument("--clusters", required=True,
                         help="comma-separated labels, -1 = noise")
    exclude.add_argument("--undo", action="store_true")

    corpus = sub.add_parser("corpus", help="corpus operations")
    corpus_sub = corpus.add_subparsers(dest="subcommand", required=True)
    corpus_build = corpus_sub.add_parser("build", help="emit train/test corpus")
    corpus_build.add_argument("--run", required=True)
    corpus_build.add_argument("--train-frac", type=_fraction("train-frac"),
                              default=0.8)
    corpus_build.add_argument("--seed", type=int, default=0)
    corpus_build.add_argument("--out", required=True)
    corpus_build.add_argument("--include-location", action="store_true")
    corpus_build.add_argument("--include-noise", action="store_true")

    probe = sub.add_parser("probe", help="probe a generation backend")
    probe_sub = probe.add_subparsers(dest="subcommand", required=True)
    probe_run = probe_sub.add_parser("run", help="issue probes and store rows")
    probe_run.add_argument("--probes", required=True,
                           help="comma-separated probe texts")
    probe_run.add_argument("--samples", type=_positive_int("samples"), default=100)
    probe_run.add_argument("--temperature", type=float, default=0.7)
    probe_run.add_argument("--top-p", type=float, default=1.0)
    probe_run.add_argument("--max-tokens", type=_positive_int("max-tokens"),
                           default=256)
    probe_run.add_argument("--run-id")
    probe_report = probe_sub.add_parser("report", help="sentinel deviation report")
    probe_report.add_argument("--run", required=True)
    probe_report.add_argument("--threshold", type=_positive_float("threshold"),
                              default=5.0)
    probe_report.add_argument("--out", help="write the report to this file")

    snapshot = sub.add_parser("snapshot", help="store snapshots")
    snap_sub = snapshot.add_subparsers(dest="subcommand", required=True)
    snap_export = snap_sub.add_parser("export")
    snap_export.add_argument("--path", required=True)
    snap_import = snap_sub.add_parser("import")
    snap_import.add_argument("--path", required=True)

    serve = sub.add_parser("serve", help="run the local HTTP API / web UI")
    serve.add_argument("--port", type=int)
    serve.add_argument("--static", help="directory of built UI assets")

    return parser


def _emit(args, payload: dict, human: str):
    if args.as_json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(human)


def _read_keyword_file(path: str) -> list[str]:
    file = Path(path)
    if not file.exists():
        raise PopscopeError(f"keyword file not found: {path}")
    lines = [line.strip() for line in file.read_text(encoding="utf-8").splitlines()]
    keywords = [line for line in lines if line]
    if not keywords:
        raise PopscopeError(f"keyword file {path} is empty")
    return keywords


def _default_window() -> tuple[dt.date, dt.date]:
    today = dt.datetime.now(dt.timezone.utc).date()
    return today - dt.timedelta(days=DEFAULT_VALIDATION_DAYS_BACK), today


def cmd_keywords_suggest(args, config: AppConfig, clients: Clients) -> dict:
    prompt = build_prompt(args.topic)
    params = GenerationParams(sample_count=args.samples)
    completions = clients.completion.complete(prompt, params)
    candidates: list[KeywordCandidate] = []
    seen: set[str] = set()
    warnings = 0
    for completion in completions:
        parsed = parse_numbered_list(completion, source_prompt=prompt)
        if not parsed:
            warnings += 1
        for cand in parsed:
            if cand.surface.casefold() in seen:
                continue
            seen.add(cand.surface.casefold())
            candidates.append(cand)
    if args.out:
        Path(args.out).write_text(
            "".join(c.surface + "\n" for c in candidates), encoding="utf-8")
    payload = {
        "prompt": prompt,
        "candidates": [{"surface": c.surface, "ordinal": c.ordinal}
                       for c in candidates],
        "unparsed_completions": warnings,
    }
    lines = [f"{c.ordinal:>3}. {c.surface}" for c in candidates]
    if warnings:
        lines.append(f"(warning: {warnings} completion(s) yielded no keywords)")
    return {"payload": payload, "human": "\n".join(lines) or "(no keywords parsed)"}


def cmd_keywords_validate(args, config: AppConfig, clients: Clients) -> dict:
    keywords = _read_keyword_file(args.infile)
    if (args.from_day is None) != (args.to_day is None):
        raise PopscopeError("--from and --to must be given together")
    if args.from_day is None:
        start, end = _default_window()
    else:
        start, end = args.from_day, args.to_day
    candidates = [KeywordCandidate(surface=k, ordinal=i + 1)
                  for i, k in enumerate(keywords)]
    reports = validate_keywords(candidates, start, end, clients.counts)
    payload = {
        "window": {"from": start.isoformat(), "to": end.isoformat()},
        "reports": [
            {
                "keyword": r.candidate.surface,
                "ordinal": r.candidate.ordinal,
                "total": r.total,
                "daily": ([[d.isoformat(), c] for d, c in r.series.daily]
                          if r.series else None),
            }
            for r in reports
        ],
    }
    if args.urls:
        payload["context_urls"] = {
            r.candidate.surface: [[d.isoformat(), url] for d, url in
                                  context_urls(r.candidate, start, end)]
            for r in reports
        }
    human = "\n".join(
        f"{r.candidate.surface}: "
        f"{r.total if r.total is not None else 'backend failure'}"
        for r in reports)
    return {"payload": payload, "human": human}


def cmd_collect(args, config: AppConfig, clients: Clients, store: Store) -> dict:
    keywords = _read_keyword_file(args.keywords)
    job = CollectionJob(
        keywords=tuple(keywords),
        start_day=args.from_day,
        end_day=args.to_day,
        filter=CollectFilter(language=args.lang, location=args.location,
                             exclude_reposts=args.no_reposts),
        policy=SamplingPolicy(
            mode=SamplingMode(args.mode),
            per_day_cap=args.day_cap,
            overall_cap_per_keyword=args.keyword_cap),
        seed=args.seed,
    )
    stats = run_collection(job, clients.counts, clients.search, store)
    payload = stats.as_dict()
    if args.report:
        Path(args.report).write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    human = "\n".join(
        f"{k}: stored {s.stored} (fetched {s.fetched}, dup {s.duplicates}, "
        f"failed days {len(s.failed_days)})"
        for k, s in stats.per_keyword.items())
    return {"payload": payload, "human": human}


def cmd_embed(args, config: AppConfig, clients: Clients, store: Store) -> dict:
    count = embed_posts(store, clients.embed, args.model_tag, args.batch_size)
    return {"payload": {"embedded": count, "model_tag": args.model_tag},
            "human": f"embedded {count} posts under model tag {args.model_tag!r}"}


def cmd_project(args, config: AppConfig, store: Store) -> dict:
    params = TsneParams(perplexity=args.perplexity,
                        learning_rate=args.learning_rate,
                        iterations=args.iterations,
                        seed=args.seed)
    coords = run_projection(store, args.run, args.model_tag, args.pca_k, params)
    return {"payload": {"run_id": args.run, "points": len(coords)},
            "human": f"projected {len(coords)} points under run {args.run!r}"}


def cmd_cluster(args, config: AppConfig, store: Store) -> dict:
    assignment = recluster(store, args.run,
                           DbscanParams(eps=args.eps, min_pts=args.min_pts))
    sizes = assignment.cluster_sizes()
    payload = {
        "run_id": args.run,
        "n_clusters": assignment.n_clusters,
        "cluster_sizes": {str(k): v for k, v in sorted(sizes.items())},
        "noise": sizes.get(-1, 0),
    }
    return {"payload": payload,
            "human": f"{assignment.n_clusters} clusters, {sizes.get(-1, 0)} noise "
                     f"points over {len(assignment.labels)} total"}


def cmd_exclude(args, config: AppConfig, store: Store) -> dict:
    try:
        labels = [int(x) for x in args.clusters.split(",") if x.strip() != ""]
    except ValueError:
        raise PopscopeError(f"bad --clusters value {args.clusters!r}")
    if not labels:
        raise PopscopeError("no cluster labels given")
    updated = set_excluded(store, args.run, labels, excluded=not args.undo)
    verb = "re-included" if args.undo else "excluded"
    return {"payload": {"run_id": args.run, "updated": updated,
                        "excluded": not args.undo},
            "human": f"{verb} {updated} rows in clusters {labels}"}


def cmd_corpus_build(args, config: AppConfig, store: Store) -> dict:
    spec = CorpusSpec(run_id=args.run, include_location=args.include_location,
                      train_fraction=args.train_frac, seed=args.seed,
                      output_dir=args.out)
    result = build_corpus(spec, store, include_noise=args.include_noise)
    manifest = result["manifest"]
    human = (f"wrote {manifest['train_records']} train / "
             f"{manifest['test_records']} test records to {args.out}")
    return {"payload": result, "human": human}


def cmd_probe_run(args, config: AppConfig, clients: Clients, store: Store) -> dict:
    params = GenerationParams(temperature=args.temperature, top_p=args.top_p,
                              max_tokens=args.max_tokens)
    spec = ProbeSpec.from_comma_separated(args.probes, params, args.samples)
    run_id = run_probes(spec, store, clients.completion, probe_run_id=args.run_id)
    rows = store.probe_rows(run_id)
    parsed = sum(1 for r in rows if r.parsed_ok)
    return {"payload": {"probe_run_id": run_id, "rows": len(rows),
                        "parsed": parsed},
            "human": f"probe run {run_id}: {len(rows)} generations, "
                     f"{parsed} parsed"}


def cmd_probe_report(args, config: AppConfig, store: Store) -> dict:
    report = sanity_check(store, args.run, threshold_pct=args.threshold)
    distribution = tag_distribution(store, args.run)
    payload = report.as_dict()
    payload["distribution"] = {t.value: c for t, c in distribution.items()}
    if args.out:
        Path(args.out).write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    lines = [f"{tag.value:>7}: expected {d.expected_pct:5.1f}%  "
             f"observed {d.observed_pct:6.2f}%  deviation {d.deviation_pct:+6.2f}%"
             for tag, d in report.per_tag.items()]
    lines.append(f"max |deviation| {report.max_abs_deviation_pct:.2f}% "
                 f"(threshold {report.threshold_pct:.1f}%) -> "
                 f"{'PASS' if report.passed else 'FAIL'}")
    if report.unreliable:
        lines.append("warning: parse-failure rate above 50%, report unreliable")
    return {"payload": payload, "human": "\n".join(lines)}


def cmd_snapshot(args, config: AppConfig, store: Store) -> dict:
    if args.subcommand == "export":
        store.export_snapshot(args.path)
        return {"payload": {"path": args.path},
                "human": f"snapshot written to {args.path}"}
    store.import_snapshot(args.path)
    return {"payload": {"path": args.path},
            "human": f"snapshot imported from {args.path}"}


def cmd_serve(args, config: AppConfig) -> int:
    import uvicorn

    from .service import create_app

    port = args.port or config.ui_port
    if not 1024 <= port <= 65535:
        raise PopscopeError(f"port {port} outside [1024, 65535]")
    app = create_app(config, static_dir=args.static or config.static_dir)
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config, overrides={"store_path": args.store})
        if args.command == "serve":
            return cmd_serve(args, config)

        needs_clients = args.command in ("collect", "embed") or (
            args.command == "keywords"
            or (args.command == "probe" and args.subcommand == "run"))
        clients = build_clients(config) if needs_clients else None

        if args.command == "keywords":
            if args.subcommand == "suggest":
                result = cmd_keywords_suggest(args, config, clients)
            else:
                result = cmd_keywords_validate(args, config, clients)
        else:
            store = Store(config.store_path)
            try:
                if args.command == "collect":
                    result = cmd_collect(args, config, clients, store)
                elif args.command == "embed":
                    result = cmd_embed(args, config, clients, store)
                elif args.command == "project":
                    result = cmd_project(args, config, store)
                elif args.command == "cluster":
                    result = cmd_cluster(args, config, store)
                elif args.command == "exclude":
                    result = cmd_exclude(args, config, store)
                elif args.command == "corpus":
                    result = cmd_corpus_build(args, config, store)
                elif args.command == "probe":
                    if args.subcommand == "run":
                        result = cmd_probe_run(args, config, clients, store)
                    else:
                        result = cmd_probe_report(args, config, store)
                elif args.command == "snapshot":
                    result = cmd_snapshot(args, config, store)
                else:  # pragma: no cover - argparse enforces choices
                    parser.error(f"unknown command {args.command}")
            finally:
                store.close()
        _emit(args, result["payload"], result["human"])
        return 0
    except (PopscopeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
