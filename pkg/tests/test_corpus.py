import datetime as dt
import hashlib
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from popscope.analytics import DbscanParams, recluster
from popscope.corpus import (
    BadProbTag,
    BadTimestamp,
    CorpusSpec,
    MalformedWrapper,
    MetaRecord,
    MissingField,
    ProbTag,
    UnknownKey,
    assign_prob_tags,
    build_corpus,
    parse,
    render,
)
from popscope.errors import InsufficientDataError

from conftest import make_post

PAPER_LINE = ("[[text: I know I'm not the prettiest dog but my love for you "
              "is unconditional always because I have a beautiful heart and "
              "soul  || created: 2022-12-27 07:10:25 || location: USA || "
              "probability: twenty]]")


class TestRender:
    def test_paper_line_byte_exact(self):
        record = MetaRecord(
            text=("I know I'm not the prettiest dog but my love for you is "
                  "unconditional always because I have a beautiful heart and "
                  "soul "),
            created="2022-12-27 07:10:25",
            location="USA",
            prob=ProbTag.TWENTY,
        )
        assert render(record) == PAPER_LINE

    def test_pipe_escaping(self):
        record = MetaRecord(text="a||b", created="2022-01-01 00:00:00",
                            location=None, prob=ProbTag.TEN)
        assert "a\\|\\|b" in render(record)

    def test_no_location_has_two_separators(self):
        record = MetaRecord(text="a", created="2022-01-01 00:00:00",
                            location=None, prob=ProbTag.TEN)
        assert render(record).count(" || ") == 2

    def test_never_emits_raw_newline_or_bare_close(self):
        record = MetaRecord(text="line1\nline2 ]] done", location="x]y",
                            created="2022-01-01 00:00:00", prob=ProbTag.FORTY)
        line = render(record)
        assert "\n" not in line
        assert line.index("]]") == len(line) - 2

    def test_field_order_fixed(self):
        record = MetaRecord(text="t", created="2022-01-01 00:00:00",
                            location="L", prob=ProbTag.THIRTY)
        line = render(record)
        assert line.index("text:") < line.index("created:") \
            < line.index("location:") < line.index("probability:")


class TestParse:
    def test_inverse_on_paper_line(self):
        record = parse(PAPER_LINE)
        assert record.prob is ProbTag.TWENTY
        assert record.location == "USA"
        assert render(record) == PAPER_LINE

    def test_missing_created_is_missing_field(self):
        with pytest.raises(MissingField) as err:
            parse("[[text: a || probability: ten]]")
        assert err.value.field == "created"

    def test_malformed_wrapper_at_offset_zero(self):
        with pytest.raises(MalformedWrapper) as err:
            parse("[text: a]]")
        assert err.value.offset == 0

    def test_unknown_key_named(self):
        with pytest.raises(UnknownKey) as err:
            parse("[[text: a || created: 2022-01-01 00:00:00 || mood: happy "
                  "|| probability: ten]]")
        assert err.value.key == "mood"

    def test_wrong_order_rejected(self):
        with pytest.raises(MalformedWrapper):
            parse("[[created: 2022-01-01 00:00:00 || text: a || "
                  "probability: ten]]")

    def test_bad_timestamp(self):
        with pytest.raises(BadTimestamp):
            parse("[[text: a || created: not-a-time || probability: ten]]")

    def test_bad_prob_tag(self):
        with pytest.raises(BadProbTag):
            parse("[[text: a || created: 2022-01-01 00:00:00 || "
                  "probability: fifty]]")

    def test_duplicate_element_rejected(self):
        with pytest.raises(MalformedWrapper):
            parse("[[text: a || text: b || created: 2022-01-01 00:00:00 || "
                  "probability: ten]]")

    def test_trailing_content_rejected(self):
        with pytest.raises(MalformedWrapper):
            parse("[[text: a || created: 2022-01-01 00:00:00 || "
                  "probability: ten]] extra")

    def test_unterminated_rejected(self):
        with pytest.raises(MalformedWrapper):
            parse("[[text: a || created: 2022-01-01 00:00:00 || "
                  "probability: ten")

    def test_offsets_are_bytes_not_chars(self):
        # é is two UTF-8 bytes; the stray '[' sits after it
        line = "[[text: é[ || created: 2022-01-01 00:00:00 || probability: ten]]"
        with pytest.raises(MalformedWrapper) as err:
            parse(line)
        prefix = line[:line.index("[", 2)]
        assert err.value.offset == len(prefix.encode("utf-8"))


def record_strategy():
    tokens = st.sampled_from(list("ab|[]\\\n\r étω") + ["||", "]]", " || "])
    adversarial = st.lists(tokens, min_size=1, max_size=25).map("".join)
    plain = st.text(min_size=1, max_size=60)
    texts = st.one_of(adversarial, plain).filter(lambda s: s)
    timestamps = st.datetimes(
        min_value=dt.datetime(2000, 1, 1),
        max_value=dt.datetime(2099, 12, 31)).map(
            lambda d: d.strftime("%Y-%m-%d %H:%M:%S"))
    locations = st.one_of(st.none(), texts)
    return st.builds(MetaRecord, text=texts, created=timestamps,
                     location=locations, prob=st.sampled_from(list(ProbTag)))


class TestRoundTripProperty:
    @settings(max_examples=500, deadline=None)
    @given(record_strategy())
    def test_parse_render_inverse(self, record):
        line = render(record)
        assert "\n" not in line and "\r" not in line
        assert parse(line) == record


class TestAssignProbTags:
    def test_zero_draws(self):
        assert assign_prob_tags(0, 1) == []

    def test_deterministic(self):
        assert assign_prob_tags(500, 7) == assign_prob_tags(500, 7)

    def test_frequencies_within_three_sigma(self):
        # binomial 3-sigma at n=10000: worst case p=0.4 -> 1.47pp
        n = 10_000
        tags = assign_prob_tags(n, 123)
        for tag, target in [(ProbTag.TEN, 10), (ProbTag.TWENTY, 20),
                            (ProbTag.THIRTY, 30), (ProbTag.FORTY, 40)]:
            observed = 100.0 * sum(1 for t in tags if t is tag) / n
            assert abs(observed - target) <= 1.5

    def test_chi_square_below_critical(self):
        n = 10_000
        tags = assign_prob_tags(n, 99)
        expected = {ProbTag.TEN: 0.10 * n, ProbTag.TWENTY: 0.20 * n,
                    ProbTag.THIRTY: 0.30 * n, ProbTag.FORTY: 0.40 * n}
        counts = {tag: sum(1 for t in tags if t is tag) for tag in ProbTag}
        chi2 = sum((counts[t] - expected[t]) ** 2 / expected[t] for t in ProbTag)
        assert chi2 < 16.27  # 99.9% critical value, 3 dof


def corpus_ready_store(store, n=40):
    """Store with a clustered run over two time-separated post groups.

    Coordinates are written directly (two tight 2-D groups) so these tests
    stay focused on corpus behavior, not projection quality.
    """
    rng = np.random.default_rng(4)
    posts = []
    for i in range(n):
        day = 18 if i < n // 2 else 24
        posts.append(make_post(
            f"p{i:03d}", text=f"post {i} with | odd ]] text",
            created=f"2022-12-{day} {i % 24:02d}:00:00",
            geo="40.7128,-74.0060" if i % 2 == 0 else None))
    store.upsert_posts(posts)
    store.create_projection_run("run", "m", 2, "{}", 0)
    coords = np.vstack([rng.normal((0.0, 0.0), 0.5, (n // 2, 2)),
                        rng.normal((100.0, 0.0), 0.5, (n - n // 2, 2))])
    store.save_projection("run", [p.post_id for p in posts], coords)
    assignment = recluster(store, "run", DbscanParams(eps=5.0, min_pts=3))
    assert assignment.n_clusters == 2
    return posts, assignment


class TestBuildCorpus:
    def spec(self, tmp_path, **kwargs):
        defaults = dict(run_id="run", include_location=False,
                        train_fraction=0.8, seed=11,
                        output_dir=str(tmp_path / "out"))
        defaults.update(kwargs)
        return CorpusSpec(**defaults)

    def test_split_arithmetic_and_disjointness(self, store, tmp_path):
        corpus_ready_store(store, n=40)
        result = build_corpus(self.spec(tmp_path), store)
        train = (tmp_path / "out" / "train.txt").read_text().splitlines()
        test = (tmp_path / "out" / "test.txt").read_text().splitlines()
        assert len(train) == 32 and len(test) == 8
        assert set(train) | set(test) == set(train + test)
        assert not set(train) & set(test)
        for line in train + test:
            parse(line)  # every line satisfies the grammar
        assert result["manifest"]["train_records"] == 32

    def test_exclusion_flows_through(self, store, tmp_path):
        _, assignment = corpus_ready_store(store, n=40)
        cluster_size = assignment.cluster_sizes()[1]
        before = build_corpus(self.spec(tmp_path, output_dir=str(tmp_path / "a")),
                              store)
        store.set_excluded("run", [1], True)
        after = build_corpus(self.spec(tmp_path, output_dir=str(tmp_path / "b")),
                             store)
        assert (before["manifest"]["total_records"]
                - after["manifest"]["total_records"]) == cluster_size

    def test_byte_identical_on_same_spec(self, store, tmp_path):
        corpus_ready_store(store, n=30)
        build_corpus(self.spec(tmp_path, output_dir=str(tmp_path / "a")), store)
        build_corpus(self.spec(tmp_path, output_dir=str(tmp_path / "b")), store)
        for name in ("train.txt", "test.txt", "manifest.json"):
            a = hashlib.sha256((tmp_path / "a" / name).read_bytes()).hexdigest()
            b = hashlib.sha256((tmp_path / "b" / name).read_bytes()).hexdigest()
            assert a == b, name

    def test_location_rendering_with_coordinates(self, store, tmp_path):
        corpus_ready_store(store, n=30)
        build_corpus(self.spec(tmp_path, include_location=True), store)
        lines = (tmp_path / "out" / "train.txt").read_text().splitlines()
        with_location = [l for l in lines if "location: " in l]
        assert with_location
        assert any("location: 40.7128,-74.0060" in l for l in with_location)

    def test_empty_candidates_rejected(self, store, tmp_path):
        corpus_ready_store(store, n=30)
        store.set_excluded("run", [0, 1], True)
        with pytest.raises(InsufficientDataError):
            build_corpus(self.spec(tmp_path), store)

    def test_manifest_records_decision_and_hash(self, store, tmp_path):
        corpus_ready_store(store, n=30)
        result = build_corpus(self.spec(tmp_path), store)
        manifest = json.loads(
            (tmp_path / "out" / "manifest.json").read_text())
        assert manifest["spec_hash"] == result["manifest"]["spec_hash"]
        assert "categorical" in manifest["prob_tag_scheme"]
        freq = manifest["tag_frequencies"]
        total = sum(freq["train"].values()) + sum(freq["test"].values())
        assert total == manifest["total_records"]


class TestCorpusSpec:
    def test_fraction_bounds(self):
        with pytest.raises(ValueError):
            CorpusSpec("r", False, 0.0, 1, "out")
        with pytest.raises(ValueError):
            CorpusSpec("r", False, 1.0, 1, "out")
