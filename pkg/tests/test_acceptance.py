"""Acceptance suite: one test per criterion, each printing a PASS line.

Runs fully offline against the shipped replay fixtures. Run with
``pytest tests/test_acceptance.py -v -s`` to see the per-criterion lines.
"""

import datetime as dt
import hashlib
import json
import random
import re
import subprocess
import sys
import time

import numpy as np
import pytest

from popscope.analytics import (
    DbscanParams,
    TsneParams,
    dbscan,
    joint_affinities,
    pca_fit,
    pca_transform,
    tsne_project,
)
from popscope.analytics import kernels
from popscope.backends.types import GenerationParams
from popscope.collector import SamplingMode, SamplingPolicy, plan_allocation
from popscope.corpus import MetaRecord, ProbTag, assign_prob_tags, parse, render
from popscope.keywords import KeywordCandidate, parse_numbered_list, \
    validate_keywords
from popscope.probe import ProbeSpec, run_probes, sanity_check
from popscope.store import Store
from popscope.testing import MockTagCompletion

from conftest import DATA, REPLAY_FIXTURES
from test_dbscan import brute_force_dbscan, canonical

WINDOW = (dt.date(2022, 12, 17), dt.date(2022, 12, 27))


class Budget:
    def __init__(self, seconds):
        self.seconds = seconds
        self.start = time.monotonic()

    def check(self):
        elapsed = time.monotonic() - self.start
        assert elapsed < self.seconds, \
            f"runtime {elapsed:.1f}s exceeded budget {self.seconds}s"
        return elapsed


def report(criterion: int, detail: str):
    print(f"[acceptance {criterion}] PASS - {detail}")


def test_criterion_1_keyword_parsing_golden():
    budget = Budget(1.0)
    cases = json.loads((DATA / "parse_golden.json").read_text())
    assert len(cases) == 20
    residue = re.compile(r"^\d{1,4}[).:]")
    extracted = expected_total = 0
    for case in cases:
        candidates = parse_numbered_list(case["completion"])
        surfaces = [c.surface for c in candidates]
        assert surfaces == case["expected"], case["name"]
        expected_total += len(case["expected"])
        extracted += len(surfaces)
        for cand in candidates:
            assert cand.surface and cand.surface == cand.surface.strip()
            assert not residue.match(cand.surface)
            assert cand.ordinal >= 1
    elapsed = budget.check()
    report(1, f"{extracted}/{expected_total} keywords from 20 completions, "
              f"0 invariant violations, {elapsed:.2f}s")


def test_criterion_2_validation_totals(replay_counts):
    candidates = [KeywordCandidate(s, i + 1) for i, s in enumerate(
        ["Bats", "Monkeys", "Snakes", "Alligators", "Tarantulas",
         "Sugar Gliders"])]
    reports = validate_keywords(candidates, *WINDOW, replay_counts)
    got = [(r.candidate.surface, r.total) for r in reports]
    assert got == [
        ("Monkeys", 36772), ("Snakes", 29830), ("Bats", 21156),
        ("Alligators", 3258), ("Tarantulas", 689), ("Sugar Gliders", 196),
    ]  # exact, tolerance 0
    report(2, "totals (36772/29830/21156/3258/689/196) exact, descending")


def test_criterion_3_sampling_properties():
    budget = Budget(5.0)
    rng = np.random.default_rng(2024)
    day0 = dt.date(2022, 12, 17)
    for trial in range(1000):
        n_kw = int(rng.integers(1, 5))
        n_days = int(rng.integers(1, 6))
        day_list = [day0 + dt.timedelta(days=i) for i in range(n_days)]
        counts = {f"k{i}": [(d, int(rng.integers(0, 400))) for d in day_list]
                  for i in range(n_kw)}
        day_cap = int(rng.integers(1, 100))
        overall = day_cap + int(rng.integers(0, 300))
        mode = (SamplingMode.PROPORTIONAL if rng.integers(2)
                else SamplingMode.UNIFORM)
        plan = plan_allocation(counts, SamplingPolicy(mode, day_cap, overall))

        m = max(c for series in counts.values() for _, c in series)
        for (kw, day), cell in plan.items():
            assert cell <= day_cap
            assert cell <= dict(counts[kw])[day]
        for kw, series in counts.items():
            assert sum(plan[(kw, d)] for d, _ in series) <= overall
        if mode is SamplingMode.PROPORTIONAL and m > 0:
            for kw, series in counts.items():
                running = 0
                for day, count in series:
                    if count == m:
                        if running + min(day_cap, count) <= overall:
                            assert plan[(kw, day)] == min(day_cap, count)
                        break
                    running += plan[(kw, day)]

    # hand-oracle prefix-clipping case from the contract
    d1, d2 = day0, day0 + dt.timedelta(days=1)
    plan = plan_allocation(
        {"A": [(d1, 60), (d2, 60)]},
        SamplingPolicy(SamplingMode.UNIFORM, 50, 80))
    assert plan == {("A", d1): 50, ("A", d2): 30}
    elapsed = budget.check()
    report(3, f"1000 random tables + prefix-clipping oracle, {elapsed:.2f}s")


def test_criterion_4_pca_properties():
    budget = Budget(10.0)
    rng = np.random.default_rng(7)
    for trial in range(100):
        n = int(rng.integers(5, 60))
        d = int(rng.integers(2, 20))
        X = rng.normal(size=(n, d)) * rng.uniform(0.1, 10)
        k = min(n, d)
        model = pca_fit(X, k)
        gram = model.components @ model.components.T
        assert np.abs(gram - np.eye(k)).max() <= 1e-8
        ev = model.explained_variance
        assert np.all(np.diff(ev) <= 1e-10) and np.all(ev >= 0)
        Y = pca_transform(model, X)
        reconstructed = model.mean + Y @ model.components
        assert np.abs(reconstructed - X).max() <= 1e-6
    elapsed = budget.check()
    report(4, f"orthonormality/ordering/reconstruction on 100 matrices, "
              f"{elapsed:.2f}s")


def _blob_fixture(n_per=500, d=64, seed=2023):
    rng = np.random.default_rng(seed)
    centers = rng.normal(0, 1, (3, d))
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)
    centers *= 14.0
    X = np.vstack([centers[i] + rng.normal(0, 0.6, (n_per, d))
                   for i in range(3)])
    return X, np.repeat([0, 1, 2], n_per)


def _kl_reference(P, Y):
    """Independent KL(P||Q) oracle via direct numpy broadcasting."""
    diff = Y[:, None, :] - Y[None, :, :]
    w = 1.0 / (1.0 + (diff ** 2).sum(-1))
    np.fill_diagonal(w, 0.0)
    q = w / w.sum()
    mask = P > 0
    return float(np.sum(P[mask] * (np.log(P[mask])
                                   - np.log(np.maximum(q[mask], 1e-12)))))


def test_criterion_5_tsne():
    budget = Budget(60.0)

    # (a) bisection accuracy on n=500
    Xa = np.random.default_rng(11).normal(size=(500, 20))
    _, _, achieved = joint_affinities(Xa, 30.0)
    assert np.abs(achieved - 30.0).max() <= 1e-4

    # (b) analytic vs central finite differences at n=50, exaggeration off
    Xb = np.random.default_rng(12).normal(size=(50, 10))
    P, _, _ = joint_affinities(Xb, 10.0)
    Y = np.random.default_rng(13).normal(0, 1.0, (50, 2))
    grad, _ = kernels.tsne_grad_kl(P, Y)
    h = 1e-5
    fd = np.zeros_like(Y)
    for i in range(50):
        for k in range(2):
            up, down = Y.copy(), Y.copy()
            up[i, k] += h
            down[i, k] -= h
            fd[i, k] = (_kl_reference(P, up) - _kl_reference(P, down)) / (2 * h)
    rel = np.linalg.norm(grad - fd) / np.linalg.norm(fd)
    assert rel < 1e-4

    # (c) 3-blob fixture: n=1500, d=64, pca_k=50, fixed seed
    X, labels = _blob_fixture()
    model = pca_fit(X, 50)
    reduced = pca_transform(model, X)
    coords = tsne_project(reduced, TsneParams(perplexity=30.0, iterations=500,
                                              seed=42))
    span = float(coords.max() - coords.min())
    assignment = dbscan(coords, DbscanParams(eps=0.05 * span, min_pts=5))
    assert assignment.n_clusters == 3
    clustered = purity_num = 0
    for cluster in range(assignment.n_clusters):
        members = np.flatnonzero(np.array(assignment.labels) == cluster)
        clustered += len(members)
        purity_num += np.bincount(labels[members]).max()
    purity = purity_num / clustered
    assert purity >= 0.95
    elapsed = budget.check()
    report(5, f"bisection<=1e-4 (n=500), grad rel err {rel:.2e}, "
              f"3 clusters purity {purity:.3f}, {elapsed:.1f}s")


def test_criterion_6_dbscan_oracle():
    budget = Budget(10.0)
    rng = np.random.default_rng(6)
    for trial in range(200):
        n = int(rng.integers(5, 201))
        points = rng.uniform(0, 1, size=(n, 2))
        eps = float(rng.uniform(0.04, 0.25))
        min_pts = int(rng.integers(2, 7))
        fast = dbscan(points, DbscanParams(eps=eps, min_pts=min_pts))
        slow = brute_force_dbscan(points, eps, min_pts)
        assert canonical(list(fast.labels)) == canonical(slow), \
            f"trial {trial}"
    elapsed = budget.check()
    report(6, f"200 instances (n<=200) match brute force exactly, "
              f"{elapsed:.1f}s")


PAPER_LINE = ("[[text: I know I'm not the prettiest dog but my love for you "
              "is unconditional always because I have a beautiful heart and "
              "soul  || created: 2022-12-27 07:10:25 || location: USA || "
              "probability: twenty]]")


def test_criterion_7_meta_wrap_round_trip():
    budget = Budget(5.0)
    record = MetaRecord(
        text=("I know I'm not the prettiest dog but my love for you is "
              "unconditional always because I have a beautiful heart and "
              "soul "),
        created="2022-12-27 07:10:25", location="USA", prob=ProbTag.TWENTY)
    assert render(record) == PAPER_LINE  # byte-exact

    tokens = ["a", "b", " ", "|", "||", "[", "]", "]]", "[[", "\\", "\\\\",
              "\n", "\r", "é", "ω", "🙂", " || ", "text: "]
    rng = random.Random(20221227)
    tags = list(ProbTag)
    failures = 0
    for i in range(10_000):
        text = "".join(rng.choice(tokens)
                       for _ in range(rng.randint(1, 24))) or "x"
        location = None if rng.random() < 0.4 else \
            "".join(rng.choice(tokens) for _ in range(rng.randint(1, 8)))
        created = (f"20{rng.randint(10, 39):02d}-{rng.randint(1, 12):02d}-"
                   f"{rng.randint(1, 28):02d} {rng.randint(0, 23):02d}:"
                   f"{rng.randint(0, 59):02d}:{rng.randint(0, 59):02d}")
        original = MetaRecord(text=text, created=created, location=location,
                              prob=rng.choice(tags))
        line = render(original)
        assert "\n" not in line and "\r" not in line
        if parse(line) != original:
            failures += 1
    assert failures == 0
    elapsed = budget.check()
    report(7, f"10000 adversarial records round-tripped, 0 failures; "
              f"paper line byte-exact, {elapsed:.2f}s")


def test_criterion_8_sentinel_distribution():
    n = 10_000
    tags = assign_prob_tags(n, seed=8)
    expected = {ProbTag.TEN: 0.10 * n, ProbTag.TWENTY: 0.20 * n,
                ProbTag.THIRTY: 0.30 * n, ProbTag.FORTY: 0.40 * n}
    counts = {tag: 0 for tag in ProbTag}
    for tag in tags:
        counts[tag] += 1
    chi2 = sum((counts[t] - expected[t]) ** 2 / expected[t] for t in ProbTag)
    assert chi2 < 16.27  # 99.9% critical value, 3 dof
    report(8, f"chi-square {chi2:.3f} < 16.27 over 10000 draws")


def test_criterion_9_probe_sanity(tmp_path):
    with Store(tmp_path / "pass.db") as store:
        spec = ProbeSpec.from_comma_separated("Ivermectin, Paxlovid",
                                              GenerationParams(), 50)
        run_id = run_probes(spec, store, MockTagCompletion(
            {"ten": 14, "twenty": 16, "thirty": 30, "forty": 40}),
            probe_run_id="paper-mix")
        paper = sanity_check(store, run_id, threshold_pct=5.0)
    assert paper.max_abs_deviation_pct == 4.0  # exact arithmetic
    assert paper.passed

    with Store(tmp_path / "fail.db") as store:
        spec = ProbeSpec.from_comma_separated("Ivermectin, Paxlovid",
                                              GenerationParams(), 50)
        run_id = run_probes(spec, store, MockTagCompletion(
            {"ten": 25, "twenty": 25, "thirty": 25, "forty": 25}),
            probe_run_id="uniform-mix")
        uniform = sanity_check(store, run_id, threshold_pct=5.0)
    assert uniform.max_abs_deviation_pct == 15.0  # exact arithmetic
    assert not uniform.passed
    report(9, "mock (14,16,30,40) -> max dev 4.0 PASS@5; uniform -> 15.0 FAIL")


SIX_KEYWORDS = "Monkeys\nSnakes\nBats\nAlligators\nTarantulas\nSugar Gliders\n"

# Pinned from the shipped fixture geometry (see scripts/make_fixtures.py).
E2E_EPS = "1.624"
E2E_MIN_PTS = "5"


def _cli_e2e_run(workdir) -> dict[str, str]:
    """Full pipeline through the CLI; returns content hashes of artifacts."""
    workdir.mkdir(parents=True, exist_ok=True)
    env_store = str(workdir / "store.db")

    def cli(*args):
        result = subprocess.run(
            [sys.executable, "-m", "popscope", "--store", env_store, *args],
            capture_output=True, text=True,
            env={"POPSCOPE_MODE": "replay",
                 "POPSCOPE_FIXTURE_DIR": str(REPLAY_FIXTURES),
                 "PATH": "/usr/bin:/bin"},
        )
        assert result.returncode == 0, \
            f"cli {args} failed: {result.stderr}\n{result.stdout}"
        return result.stdout

    keywords_file = workdir / "six.txt"
    keywords_file.write_text(SIX_KEYWORDS)

    cli("keywords", "suggest", "--topic", "Here's a short list of exotic pets",
        "--out", str(workdir / "candidates.txt"))
    cli("keywords", "validate", "--from", "2022-12-17", "--to", "2022-12-27",
        "--in", str(keywords_file))
    cli("collect", "--keywords", str(keywords_file), "--from", "2022-12-17",
        "--to", "2022-12-27", "--mode", "uniform", "--day-cap", "8",
        "--keyword-cap", "60", "--lang", "en",
        "--report", str(workdir / "collect-report.json"))
    cli("embed", "--model-tag", "synth-emb-64")
    cli("project", "--run", "blobrun", "--model-tag", "synth-emb-64",
        "--pca-k", "50", "--perplexity", "30", "--iterations", "400",
        "--seed", "11")
    cluster_out = cli("--json", "cluster", "--run", "blobrun",
                      "--eps", E2E_EPS, "--min-pts", E2E_MIN_PTS)
    assert json.loads(cluster_out)["n_clusters"] == 3
    cli("exclude", "--run", "blobrun", "--clusters", "1")
    cli("corpus", "build", "--run", "blobrun", "--train-frac", "0.8",
        "--seed", "4", "--out", str(workdir / "corpus"))
    cli("probe", "run", "--probes", "Ivermectin, Paxlovid", "--samples", "50",
        "--run-id", "probe-e2e")
    cli("probe", "report", "--run", "probe-e2e",
        "--out", str(workdir / "probe-report.json"))

    hashes = {}
    for name in ("corpus/train.txt", "corpus/test.txt", "corpus/manifest.json",
                 "collect-report.json", "probe-report.json",
                 "candidates.txt"):
        hashes[name] = hashlib.sha256(
            (workdir / name).read_bytes()).hexdigest()
    return hashes


def test_criterion_10_end_to_end_replay(tmp_path):
    budget = Budget(120.0)
    first = _cli_e2e_run(tmp_path / "run1")
    second = _cli_e2e_run(tmp_path / "run2")
    assert first == second  # deterministic manifests and reports
    probe_report = json.loads(
        (tmp_path / "run1" / "probe-report.json").read_text())
    assert probe_report["max_abs_deviation_pct"] == 4.0
    assert probe_report["passed"] is True
    manifest = json.loads(
        (tmp_path / "run1" / "corpus" / "manifest.json").read_text())
    assert manifest["total_records"] == 240  # 359 stored - 119 excluded
    elapsed = budget.check()
    report(10, f"CLI chain twice, identical hashes "
               f"({first['corpus/manifest.json'][:10]}...), {elapsed:.1f}s")
