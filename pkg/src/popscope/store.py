"""Embedded relational persistence for the whole pipeline.

Single-file sqlite database, single-writer (application-level file lock),
many-reader. Embedding vectors are packed little-endian float32 blobs next
to an explicit dimension column, so round trips are bit-exact.
"""

from __future__ import annotations

import base64
import datetime as dt
import json
import sqlite3
import threading
import zipfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from filelock import FileLock

from .collector import Post
from .errors import MigrationError, NotFoundError, StorageError

SCHEMA_VERSION = 1

_SCHEMA = """
CREATE TABLE meta (
  key TEXT PRIMARY KEY,
  value TEXT NOT NULL
);
CREATE TABLE keywords (
  keyword TEXT PRIMARY KEY,
  added_at TEXT NOT NULL
);
CREATE TABLE posts (
  post_id TEXT PRIMARY KEY,
  text TEXT NOT NULL,
  created_at TEXT NOT NULL,
  author_id TEXT NOT NULL,
  lang TEXT NOT NULL,
  geo TEXT,
  keyword TEXT NOT NULL
);
CREATE TABLE users (
  author_id TEXT PRIMARY KEY,
  handle TEXT NOT NULL,
  display_name TEXT NOT NULL,
  followers INTEGER NOT NULL,
  fetched_at TEXT NOT NULL
);
CREATE TABLE embeddings (
  post_id TEXT NOT NULL REFERENCES posts(post_id),
  model_tag TEXT NOT NULL,
  dim INTEGER NOT NULL,
  vector BLOB NOT NULL,
  PRIMARY KEY (post_id, model_tag)
);
CREATE TABLE projection_runs (
  run_id TEXT PRIMARY KEY,
  model_tag TEXT NOT NULL,
  pca_k INTEGER NOT NULL,
  params_json TEXT NOT NULL,
  seed INTEGER NOT NULL,
  created_at TEXT NOT NULL
);
CREATE TABLE cluster_rows (
  post_id TEXT NOT NULL REFERENCES posts(post_id),
  run_id TEXT NOT NULL REFERENCES projection_runs(run_id),
  x REAL NOT NULL,
  y REAL NOT NULL,
  cluster_label INTEGER,
  excluded INTEGER NOT NULL DEFAULT 0,
  PRIMARY KEY (post_id, run_id)
);
CREATE TABLE corpus_exports (
  export_id TEXT PRIMARY KEY,
  run_id TEXT NOT NULL REFERENCES projection_runs(run_id),
  spec_json TEXT NOT NULL,
  manifest_json TEXT NOT NULL,
  created_at TEXT NOT NULL
);
CREATE TABLE probe_runs (
  probe_run_id TEXT PRIMARY KEY,
  spec_json TEXT NOT NULL,
  created_at TEXT NOT NULL,
  report_json TEXT
);
CREATE TABLE probe_rows (
  row_id INTEGER PRIMARY KEY AUTOINCREMENT,
  probe_run_id TEXT NOT NULL REFERENCES probe_runs(probe_run_id),
  probe_text TEXT NOT NULL,
  generated_text TEXT NOT NULL,
  parsed_ok INTEGER NOT NULL,
  prob_tag TEXT,
  created_at TEXT NOT NULL,
  CHECK ((parsed_ok = 1 AND prob_tag IS NOT NULL)
      OR (parsed_ok = 0 AND prob_tag IS NULL))
);
"""

TABLES = [
    "meta", "keywords", "posts", "users", "embeddings", "projection_runs",
    "cluster_rows", "corpus_exports", "probe_runs", "probe_rows",
]

UTC = dt.timezone.utc


def format_ts(value: dt.datetime) -> str:
    """UTC wall-clock format used everywhere in the database."""
    return value.astimezone(UTC).strftime("%Y-%m-%d %H:%M:%S")


def parse_ts(text: str) -> dt.datetime:
    return dt.datetime.strptime(text, "%Y-%m-%d %H:%M:%S").replace(tzinfo=UTC)


def _now_ts() -> str:
    return format_ts(dt.datetime.now(UTC))


@dataclass(frozen=True)
class StoredUser:
    author_id: str
    handle: str
    display_name: str
    followers: int
    fetched_at: str


@dataclass(frozen=True)
class ClusterRow:
    post_id: str
    run_id: str
    x: float
    y: float
    cluster_label: int | None  # -1 = noise, None = not yet clustered
    excluded: bool


@dataclass(frozen=True)
class ProbeRow:
    probe_run_id: str
    probe_text: str
    generated_text: str
    parsed_ok: bool
    prob_tag: str | None
    created_at: str


class Store:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        fresh = not self.path.exists()
        self._write_lock = FileLock(str(self.path) + ".lock")
        self._local_lock = threading.Lock()
        self.conn = sqlite3.connect(str(self.path), check_same_thread=False)
        self.conn.execute("PRAGMA foreign_keys = ON")
        if fresh:
            self._init_schema()
        else:
            self._check_version()

    def _init_schema(self):
        with self._writer():
            self.conn.executescript(_SCHEMA)
            self.conn.execute("INSERT INTO meta (key, value) VALUES ('version', ?)",
                              (str(SCHEMA_VERSION),))
            self.conn.commit()

    def _check_version(self):
        try:
            row = self.conn.execute(
                "SELECT value FROM meta WHERE key = 'version'").fetchone()
        except sqlite3.DatabaseError as exc:
            raise StorageError(f"not a popscope store: {self.path}") from exc
        if row is None or int(row[0]) != SCHEMA_VERSION:
            found = "missing" if row is None else row[0]
            raise MigrationError(
                f"store schema version {found}, expected {SCHEMA_VERSION}")

    def close(self):
        self.conn.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _writer(self):
        # Exclusive application-level lock; reentrant within this process.
        self._write_lock.acquire(timeout=30)
        return _WriterGuard(self)

    # -- keywords / posts / users -------------------------------------------

    def upsert_keywords(self, keywords) -> int:
        now = _now_ts()
        with self._writer():
            inserted = 0
            for keyword in keywords:
                cur = self.conn.execute(
                    "INSERT OR IGNORE INTO keywords (keyword, added_at) VALUES (?, ?)",
                    (keyword, now))
                inserted += cur.rowcount
            self.conn.commit()
        return inserted

    def upsert_posts(self, posts: list[Post]) -> tuple[int, int]:
        """Insert posts, idempotent on post_id: (inserted, duplicates)."""
        inserted = 0
        with self._writer():
            try:
                for post in posts:
                    cur = self.conn.execute(
                        "INSERT OR IGNORE INTO posts "
                        "(post_id, text, created_at, author_id, lang, geo, keyword) "
                        "VALUES (?, ?, ?, ?, ?, ?, ?)",
                        (post.post_id, post.text, format_ts(post.created_at),
                         post.author_id, post.lang, post.geo, post.keyword))
                    inserted += cur.rowcount
                self.conn.commit()
            except sqlite3.IntegrityError as exc:
                self.conn.rollback()
                raise StorageError(f"post upsert failed: {exc}") from exc
        return inserted, len(posts) - inserted

    def upsert_users(self, users: list[dict]) -> int:
        now = _now_ts()
        with self._writer():
            count = 0
            for user in users:
                cur = self.conn.execute(
                    "INSERT INTO users (author_id, handle, display_name, followers, fetched_at) "
                    "VALUES (?, ?, ?, ?, ?) "
                    "ON CONFLICT(author_id) DO UPDATE SET handle=excluded.handle, "
                    "display_name=excluded.display_name, followers=excluded.followers, "
                    "fetched_at=excluded.fetched_at",
                    (user["author_id"], user.get("handle", ""),
                     user.get("display_name", ""), int(user.get("followers", 0)), now))
                count += cur.rowcount
            self.conn.commit()
        return count

    def get_user(self, author_id: str) -> StoredUser | None:
        row = self.conn.execute(
            "SELECT author_id, handle, display_name, followers, fetched_at "
            "FROM users WHERE author_id = ?", (author_id,)).fetchone()
        return StoredUser(*row) if row else None

    def get_post(self, post_id: str) -> Post | None:
        row = self.conn.execute(
            "SELECT post_id, text, created_at, author_id, lang, geo, keyword "
            "FROM posts WHERE post_id = ?", (post_id,)).fetchone()
        return self._post_from_row(row) if row else None

    @staticmethod
    def _post_from_row(row) -> Post:
        return Post(post_id=row[0], text=row[1], created_at=parse_ts(row[2]),
                    author_id=row[3], lang=row[4], geo=row[5], keyword=row[6])

    def post_count(self) -> int:
        return self.conn.execute("SELECT COUNT(*) FROM posts").fetchone()[0]

    # -- embeddings ----------------------------------------------------------

    def posts_missing_embedding(self, model_tag: str) -> list[tuple[str, str]]:
        rows = self.conn.execute(
            "SELECT p.post_id, p.text FROM posts p "
            "LEFT JOIN embeddings e ON e.post_id = p.post_id AND e.model_tag = ? "
            "WHERE e.post_id IS NULL ORDER BY p.post_id", (model_tag,)).fetchall()
        return [(r[0], r[1]) for r in rows]

    def upsert_embeddings(self, model_tag: str,
                          rows: list[tuple[str, list[float]]]) -> int:
        if not rows:
            return 0
        dim = len(rows[0][1])
        existing = self.conn.execute(
            "SELECT dim FROM embeddings WHERE model_tag = ? LIMIT 1",
            (model_tag,)).fetchone()
        if existing is not None and existing[0] != dim:
            raise StorageError(
                f"embedding width {dim} conflicts with stored width {existing[0]} "
                f"for model_tag {model_tag}")
        with self._writer():
            try:
                for post_id, vector in rows:
                    if len(vector) != dim:
                        raise StorageError("ragged embedding rows")
                    blob = np.asarray(vector, dtype="<f4").tobytes()
                    self.conn.execute(
                        "INSERT INTO embeddings (post_id, model_tag, dim, vector) "
                        "VALUES (?, ?, ?, ?) "
                        "ON CONFLICT(post_id, model_tag) DO UPDATE SET "
                        "dim=excluded.dim, vector=excluded.vector",
                        (post_id, model_tag, dim, blob))
                self.conn.commit()
            except sqlite3.IntegrityError as exc:
                self.conn.rollback()
                raise StorageError(f"embedding upsert failed: {exc}") from exc
        return len(rows)

    def embedding_matrix(self, model_tag: str) -> tuple[list[str], np.ndarray]:
        """All embeddings for a model tag, rows ordered by ascending post_id."""
        rows = self.conn.execute(
            "SELECT post_id, dim, vector FROM embeddings WHERE model_tag = ? "
            "ORDER BY post_id", (model_tag,)).fetchall()
        if not rows:
            return [], np.zeros((0, 0))
        ids = [r[0] for r in rows]
        matrix = np.vstack([
            np.frombuffer(r[2], dtype="<f4").astype(np.float64) for r in rows])
        if matrix.shape[1] != rows[0][1]:
            raise StorageError("stored embedding dim mismatch")
        return ids, matrix

    # -- projection runs and cluster rows ------------------------------------

    def create_projection_run(self, run_id: str, model_tag: str, pca_k: int,
                              params_json: str, seed: int):
        with self._writer():
            try:
                self.conn.execute(
                    "INSERT INTO projection_runs "
                    "(run_id, model_tag, pca_k, params_json, seed, created_at) "
                    "VALUES (?, ?, ?, ?, ?, ?)",
                    (run_id, model_tag, pca_k, params_json, seed, _now_ts()))
                self.conn.commit()
            except sqlite3.IntegrityError as exc:
                self.conn.rollback()
                raise StorageError(f"projection run {run_id!r} already exists") from exc

    def require_run(self, run_id: str):
        row = self.conn.execute(
            "SELECT run_id FROM projection_runs WHERE run_id = ?",
            (run_id,)).fetchone()
        if row is None:
            raise NotFoundError(f"unknown projection run {run_id!r}")

    def get_projection_run(self, run_id: str) -> dict:
        row = self.conn.execute(
            "SELECT run_id, model_tag, pca_k, params_json, seed, created_at "
            "FROM projection_runs WHERE run_id = ?", (run_id,)).fetchone()
        if row is None:
            raise NotFoundError(f"unknown projection run {run_id!r}")
        return {"run_id": row[0], "model_tag": row[1], "pca_k": row[2],
                "params_json": row[3], "seed": row[4], "created_at": row[5]}

    def save_projection(self, run_id: str, post_ids: list[str],
                        coords: np.ndarray):
        self.require_run(run_id)
        with self._writer():
            try:
                self.conn.execute(
                    "DELETE FROM cluster_rows WHERE run_id = ?", (run_id,))
                for post_id, (x, y) in zip(post_ids, coords):
                    self.conn.execute(
                        "INSERT INTO cluster_rows (post_id, run_id, x, y, cluster_label, excluded) "
                        "VALUES (?, ?, ?, ?, NULL, 0)",
                        (post_id, run_id, float(x), float(y)))
                self.conn.commit()
            except sqlite3.IntegrityError as exc:
                self.conn.rollback()
                raise StorageError(f"projection rows violate integrity: {exc}") from exc

    def projection_rows(self, run_id: str) -> list[ClusterRow]:
        self.require_run(run_id)
        rows = self.conn.execute(
            "SELECT post_id, run_id, x, y, cluster_label, excluded "
            "FROM cluster_rows WHERE run_id = ? ORDER BY post_id",
            (run_id,)).fetchall()
        return [ClusterRow(r[0], r[1], r[2], r[3], r[4], bool(r[5])) for r in rows]

    def overwrite_labels(self, run_id: str, labels_by_post: dict[str, int]):
        """Replace every label for the run and reset exclusion flags."""
        self.require_run(run_id)
        with self._writer():
            for post_id, label in labels_by_post.items():
                self.conn.execute(
                    "UPDATE cluster_rows SET cluster_label = ?, excluded = 0 "
                    "WHERE run_id = ? AND post_id = ?",
                    (int(label), run_id, post_id))
            self.conn.commit()

    def set_excluded(self, run_id: str, cluster_labels: list[int],
                     excluded: bool) -> int:
        self.require_run(run_id)
        present = {r[0] for r in self.conn.execute(
            "SELECT DISTINCT cluster_label FROM cluster_rows "
            "WHERE run_id = ? AND cluster_label IS NOT NULL", (run_id,))}
        missing = sorted(set(cluster_labels) - present)
        if missing:
            raise NotFoundError(
                f"labels not present in run {run_id!r}: {missing}")
        count = 0
        with self._writer():
            for label in set(cluster_labels):
                cur = self.conn.execute(
                    "UPDATE cluster_rows SET excluded = ? "
                    "WHERE run_id = ? AND cluster_label = ?",
                    (1 if excluded else 0, run_id, int(label)))
                count += cur.rowcount
            self.conn.commit()
        return count

    def corpus_candidates(self, run_id: str, keyword: str | None = None,
                          date_range: tuple[dt.date, dt.date] | None = None,
                          include_noise: bool = False) -> list[Post]:
        """Posts joined to this run's cluster rows, exclusions honored.

        Noise (-1) and not-yet-clustered rows are omitted unless
        include_noise. Ordered by ascending created_at (post_id breaks ties).
        """
        self.require_run(run_id)
        sql = (
            "SELECT p.post_id, p.text, p.created_at, p.author_id, p.lang, p.geo, "
            "p.keyword FROM posts p JOIN cluster_rows c ON c.post_id = p.post_id "
            "WHERE c.run_id = ? AND c.excluded = 0")
        args: list = [run_id]
        if not include_noise:
            sql += " AND c.cluster_label IS NOT NULL AND c.cluster_label != -1"
        if keyword is not None:
            sql += " AND p.keyword = ?"
            args.append(keyword)
        if date_range is not None:
            lo, hi = date_range
            sql += " AND p.created_at >= ? AND p.created_at <= ?"
            args.extend([f"{lo.isoformat()} 00:00:00", f"{hi.isoformat()} 23:59:59"])
        sql += " ORDER BY p.created_at, p.post_id"
        rows = self.conn.execute(sql, args).fetchall()
        return [self._post_from_row(r) for r in rows]

    def record_corpus_export(self, export_id: str, run_id: str, spec_json: str,
                             manifest_json: str):
        self.require_run(run_id)
        with self._writer():
            self.conn.execute(
                "INSERT INTO corpus_exports (export_id, run_id, spec_json, "
                "manifest_json, created_at) VALUES (?, ?, ?, ?, ?) "
                "ON CONFLICT(export_id) DO UPDATE SET "
                "manifest_json=excluded.manifest_json, created_at=excluded.created_at",
                (export_id, run_id, spec_json, manifest_json, _now_ts()))
            self.conn.commit()

    # -- probes ---------------------------------------------------------------

    def create_probe_run(self, probe_run_id: str, spec_json: str):
        with self._writer():
            try:
                self.conn.execute(
                    "INSERT INTO probe_runs (probe_run_id, spec_json, created_at) "
                    "VALUES (?, ?, ?)", (probe_run_id, spec_json, _now_ts()))
                self.conn.commit()
            except sqlite3.IntegrityError as exc:
                self.conn.rollback()
                raise StorageError(f"probe run {probe_run_id!r} already exists") from exc

    def require_probe_run(self, probe_run_id: str):
        row = self.conn.execute(
            "SELECT probe_run_id FROM probe_runs WHERE probe_run_id = ?",
            (probe_run_id,)).fetchone()
        if row is None:
            raise NotFoundError(f"unknown probe run {probe_run_id!r}")

    def add_probe_rows(self, rows: list[ProbeRow]):
        with self._writer():
            try:
                for row in rows:
                    self.conn.execute(
                        "INSERT INTO probe_rows (probe_run_id, probe_text, "
                        "generated_text, parsed_ok, prob_tag, created_at) "
                        "VALUES (?, ?, ?, ?, ?, ?)",
                        (row.probe_run_id, row.probe_text, row.generated_text,
                         1 if row.parsed_ok else 0, row.prob_tag, row.created_at))
                self.conn.commit()
            except sqlite3.IntegrityError as exc:
                self.conn.rollback()
                raise StorageError(f"probe row insert failed: {exc}") from exc

    def probe_rows(self, probe_run_id: str) -> list[ProbeRow]:
        self.require_probe_run(probe_run_id)
        rows = self.conn.execute(
            "SELECT probe_run_id, probe_text, generated_text, parsed_ok, prob_tag, "
            "created_at FROM probe_rows WHERE probe_run_id = ? ORDER BY row_id",
            (probe_run_id,)).fetchall()
        return [ProbeRow(r[0], r[1], r[2], bool(r[3]), r[4], r[5]) for r in rows]

    def save_probe_report(self, probe_run_id: str, report_json: str):
        self.require_probe_run(probe_run_id)
        with self._writer():
            self.conn.execute(
                "UPDATE probe_runs SET report_json = ? WHERE probe_run_id = ?",
                (report_json, probe_run_id))
            self.conn.commit()

    # -- snapshots -------------------------------------------------------------

    def table_counts(self) -> dict[str, int]:
        return {t: self.conn.execute(f"SELECT COUNT(*) FROM {t}").fetchone()[0]
                for t in TABLES}

    def export_snapshot(self, path: str | Path):
        """Write schema DDL plus per-table rows into one zip archive."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with zipfile.ZipFile(path, "w", zipfile.ZIP_DEFLATED) as archive:
            archive.writestr("schema.sql", _SCHEMA)
            archive.writestr("snapshot.json",
                             json.dumps({"version": SCHEMA_VERSION}))
            for table in TABLES:
                cols = [c[1] for c in
                        self.conn.execute(f"PRAGMA table_info({table})")]
                lines = []
                order = "ORDER BY " + ", ".join(
                    c for c in cols if c != "vector")
                for row in self.conn.execute(f"SELECT * FROM {table} {order}"):
                    doc = {}
                    for col, value in zip(cols, row):
                        if isinstance(value, bytes):
                            doc[col] = {"__b64__": base64.b64encode(value).decode()}
                        else:
                            doc[col] = value
                    lines.append(json.dumps(doc, sort_keys=True))
                archive.writestr(f"tables/{table}.jsonl", "\n".join(lines) + "\n")

    def import_snapshot(self, path: str | Path):
        """Load a snapshot into this (empty) store. Never merges."""
        counts = self.table_counts()
        nonempty = [t for t, n in counts.items() if n > 0 and t != "meta"]
        if nonempty:
            raise StorageError(
                f"refusing to import into non-empty store (rows in {nonempty})")
        with zipfile.ZipFile(path) as archive:
            info = json.loads(archive.read("snapshot.json"))
            if info.get("version") != SCHEMA_VERSION:
                raise MigrationError(
                    f"snapshot schema version {info.get('version')}, "
                    f"expected {SCHEMA_VERSION}")
            with self._writer():
                self.conn.execute("DELETE FROM meta")
                for table in TABLES:
                    payload = archive.read(f"tables/{table}.jsonl").decode()
                    for line in payload.splitlines():
                        if not line.strip():
                            continue
                        doc = json.loads(line)
                        cols, values = [], []
                        for col, value in doc.items():
                            cols.append(col)
                            if isinstance(value, dict) and "__b64__" in value:
                                value = base64.b64decode(value["__b64__"])
                            values.append(value)
                        marks = ",".join("?" * len(cols))
                        self.conn.execute(
                            f"INSERT INTO {table} ({','.join(cols)}) VALUES ({marks})",
                            values)
                self.conn.commit()


class _WriterGuard:
    def __init__(self, store: Store):
        self.store = store

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.store._write_lock.release()
        return False
