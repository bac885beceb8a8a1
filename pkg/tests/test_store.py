import datetime as dt

import numpy as np
import pytest

from popscope.errors import MigrationError, NotFoundError, StorageError
from popscope.store import SCHEMA_VERSION, Store, format_ts, parse_ts

from conftest import make_post

UTC = dt.timezone.utc


class TestUpsertPosts:
    def test_fresh_inserts(self, store):
        result = store.upsert_posts([make_post(f"p{i}") for i in range(3)])
        assert result == (3, 0)

    def test_idempotent_on_repeat(self, store):
        posts = [make_post(f"p{i}") for i in range(3)]
        store.upsert_posts(posts)
        assert store.upsert_posts(posts) == (0, 3)

    def test_mixed_batch_additivity(self, store):
        store.upsert_posts([make_post("seen")])
        result = store.upsert_posts(
            [make_post("a"), make_post("b"), make_post("seen")])
        assert result == (2, 1)
        assert result[0] + result[1] == 3

    def test_round_trip_preserves_fields(self, store):
        post = make_post("p1", text="hello | world", geo="40.0,-74.0",
                         created="2022-12-18 23:59:59")
        store.upsert_posts([post])
        assert store.get_post("p1") == post


class TestUsers:
    def test_upsert_users_unique_author(self, store):
        store.upsert_users([{"author_id": "a1", "handle": "h",
                             "display_name": "n", "followers": 5}])
        store.upsert_users([{"author_id": "a1", "handle": "h2",
                             "display_name": "n2", "followers": 9}])
        rows = store.conn.execute(
            "SELECT author_id, handle, followers FROM users").fetchall()
        assert rows == [("a1", "h2", 9)]

    def test_get_user_round_trip(self, store):
        store.upsert_users([{"author_id": "a1", "handle": "h",
                             "display_name": "Display Name", "followers": 5}])
        user = store.get_user("a1")
        assert user is not None
        assert (user.author_id, user.handle, user.display_name,
                user.followers) == ("a1", "h", "Display Name", 5)
        assert store.get_user("ghost") is None


class TestEmbeddings:
    def test_bit_exact_round_trip(self, store):
        store.upsert_posts([make_post("p1"), make_post("p2")])
        v1 = [0.1, -2.5, 3.25, 1e-8]
        v2 = [7.5, 0.0, -0.125, 99.0]
        store.upsert_embeddings("m", [("p1", v1), ("p2", v2)])
        ids, matrix = store.embedding_matrix("m")
        assert ids == ["p1", "p2"]
        expected = np.asarray([v1, v2], dtype="<f4").astype(np.float64)
        assert np.array_equal(matrix, expected)

    def test_width_conflict_rejected(self, store):
        store.upsert_posts([make_post("p1"), make_post("p2")])
        store.upsert_embeddings("m", [("p1", [1.0, 2.0])])
        with pytest.raises(StorageError):
            store.upsert_embeddings("m", [("p2", [1.0, 2.0, 3.0])])

    def test_referential_integrity(self, store):
        with pytest.raises(StorageError):
            store.upsert_embeddings("m", [("ghost", [1.0])])

    def test_projection_rows_need_existing_posts(self, store):
        store.create_projection_run("r", "m", 2, "{}", 0)
        with pytest.raises(StorageError):
            store.save_projection("r", ["ghost"], np.array([[0.0, 0.0]]))

    def test_missing_embedding_listing(self, store):
        store.upsert_posts([make_post("b"), make_post("a")])
        store.upsert_embeddings("m", [("a", [1.0])])
        assert store.posts_missing_embedding("m") == [("b", "post body b")]


def seed_run(store, n=6, run_id="r1"):
    """Posts + projection rows with labels: 0, 0, 1, 1, -1, -1."""
    posts = [make_post(f"p{i}", created=f"2022-12-{18 + i} 10:00:00")
             for i in range(n)]
    store.upsert_posts(posts)
    store.upsert_embeddings("m", [(p.post_id, [float(i), 0.0])
                                  for i, p in enumerate(posts)])
    store.create_projection_run(run_id, "m", 2, "{}", 0)
    store.save_projection(run_id, [p.post_id for p in posts],
                          np.array([[float(i), 0.0] for i in range(n)]))
    labels = {f"p{i}": (0 if i < 2 else 1 if i < 4 else -1) for i in range(n)}
    store.overwrite_labels(run_id, labels)
    return posts


class TestCorpusCandidates:
    def test_excluded_cluster_omitted(self, store):
        seed_run(store)
        store.set_excluded("r1", [1], True)
        got = store.corpus_candidates("r1")
        assert [p.post_id for p in got] == ["p0", "p1"]

    def test_noise_omitted_unless_requested(self, store):
        seed_run(store)
        assert [p.post_id for p in store.corpus_candidates("r1")] == \
            ["p0", "p1", "p2", "p3"]
        assert len(store.corpus_candidates("r1", include_noise=True)) == 6

    def test_date_range_filter_matches_hand_filter(self, store):
        posts = seed_run(store)
        lo, hi = dt.date(2022, 12, 19), dt.date(2022, 12, 21)
        got = store.corpus_candidates("r1", date_range=(lo, hi))
        expected = [p.post_id for p in posts
                    if lo <= p.created_at.date() <= hi
                    and p.post_id in ("p0", "p1", "p2", "p3")]
        assert [p.post_id for p in got] == expected
        assert got == sorted(got, key=lambda p: (p.created_at, p.post_id))

    def test_keyword_filter(self, store):
        seed_run(store)
        assert store.corpus_candidates("r1", keyword="nope") == []

    def test_unknown_run_not_found(self, store):
        seed_run(store)
        with pytest.raises(NotFoundError):
            store.corpus_candidates("missing")

    def test_partition_invariant(self, store):
        # candidates(include_noise) + excluded rows = all rows for the run
        seed_run(store)
        store.set_excluded("r1", [0], True)
        included = {p.post_id for p in
                    store.corpus_candidates("r1", include_noise=True)}
        rows = store.projection_rows("r1")
        excluded = {r.post_id for r in rows if r.excluded}
        assert included | excluded == {r.post_id for r in rows}
        assert included & excluded == set()


class TestExclusion:
    def test_count_equals_cluster_size(self, store):
        seed_run(store)
        assert store.set_excluded("r1", [1], True) == 2

    def test_exclude_include_involution(self, store):
        seed_run(store)
        store.set_excluded("r1", [1], True)
        store.set_excluded("r1", [1], False)
        rows = store.projection_rows("r1")
        assert not any(r.excluded for r in rows)

    def test_noise_excludable(self, store):
        seed_run(store)
        assert store.set_excluded("r1", [-1], True) == 2

    def test_unknown_label_lists_offenders(self, store):
        seed_run(store)
        with pytest.raises(NotFoundError) as err:
            store.set_excluded("r1", [1, 7, 9], True)
        assert "[7, 9]" in str(err.value)


class TestProbeRows:
    def test_prob_tag_iff_parsed(self, store):
        from popscope.store import ProbeRow

        store.create_probe_run("run", "{}")
        with pytest.raises(StorageError):
            store.add_probe_rows([ProbeRow("run", "p", "g", True, None,
                                           "2022-01-01 00:00:00")])
        with pytest.raises(StorageError):
            store.add_probe_rows([ProbeRow("run", "p", "g", False, "ten",
                                           "2022-01-01 00:00:00")])

    def test_rows_require_run(self, store):
        from popscope.store import ProbeRow

        with pytest.raises(StorageError):
            store.add_probe_rows([ProbeRow("ghost", "p", "g", False, None,
                                           "2022-01-01 00:00:00")])


class TestSnapshots:
    def test_round_trip_row_counts(self, store, tmp_path):
        seed_run(store)
        store.set_excluded("r1", [1], True)
        snap = tmp_path / "snap.zip"
        store.export_snapshot(snap)
        with Store(tmp_path / "fresh.db") as fresh:
            fresh.import_snapshot(snap)
            assert fresh.table_counts() == store.table_counts()
            assert fresh.projection_rows("r1") == store.projection_rows("r1")

    def test_import_over_nonempty_refused(self, store, tmp_path):
        seed_run(store)
        snap = tmp_path / "snap.zip"
        store.export_snapshot(snap)
        with pytest.raises(StorageError):
            store.import_snapshot(snap)  # same store is non-empty

    def test_version_gate(self, store, tmp_path):
        import json
        import zipfile

        seed_run(store)
        snap = tmp_path / "snap.zip"
        store.export_snapshot(snap)
        # forge a newer-version snapshot
        forged = tmp_path / "forged.zip"
        with zipfile.ZipFile(snap) as src, zipfile.ZipFile(forged, "w") as dst:
            for item in src.namelist():
                data = src.read(item)
                if item == "snapshot.json":
                    data = json.dumps({"version": SCHEMA_VERSION + 1}).encode()
                dst.writestr(item, data)
        with Store(tmp_path / "fresh.db") as fresh:
            with pytest.raises(MigrationError):
                fresh.import_snapshot(forged)


class TestTimestamps:
    def test_format_parse_utc_round_trip(self):
        moment = dt.datetime(2022, 12, 27, 7, 10, 25, tzinfo=UTC)
        assert parse_ts(format_ts(moment)) == moment

    def test_non_utc_normalized(self):
        eastern = dt.timezone(dt.timedelta(hours=-5))
        moment = dt.datetime(2022, 12, 27, 2, 10, 25, tzinfo=eastern)
        assert format_ts(moment) == "2022-12-27 07:10:25"
