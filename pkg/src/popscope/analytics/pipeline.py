"""Store-facing refinement chain: embed, project (PCA then t-SNE), cluster,
and exclusion bookkeeping."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..errors import InsufficientDataError
from ..store import Store
from .dbscan import ClusterAssignment, DbscanParams, dbscan
from .pca import pca_fit, pca_transform
from .tsne import TsneParams, tsne_project

DEFAULT_PCA_K = 50


@dataclass(frozen=True)
class EmbeddingMatrix:
    rows: np.ndarray  # (n, d)
    post_ids: tuple[str, ...]

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "post_ids", tuple(self.post_ids))
        if rows.ndim != 2 or rows.shape[0] < 1:
            raise ValueError("embedding matrix must have at least one row")
        if not np.all(np.isfinite(rows)):
            raise ValueError("non-finite embedding values")
        if len(self.post_ids) != rows.shape[0]:
            raise ValueError("post_ids not aligned to rows")
        if len(set(self.post_ids)) != len(self.post_ids):
            raise ValueError("duplicate post_ids")


def embed_posts(store: Store, embed_client, model_tag: str,
                batch_size: int = 64) -> int:
    """Embed every stored post lacking a vector for model_tag.

    Posts are processed in ascending post_id order in fixed-size batches,
    so replay fixtures line up run after run.
    """
    pending = store.posts_missing_embedding(model_tag)
    embedded = 0
    for start in range(0, len(pending), batch_size):
        batch = pending[start:start + batch_size]
        vectors = embed_client.embed([text for _, text in batch])
        store.upsert_embeddings(
            model_tag, [(post_id, vec) for (post_id, _), vec in zip(batch, vectors)])
        embedded += len(batch)
    return embedded


def run_projection(store: Store, run_id: str, model_tag: str,
                   pca_k: int, tsne_params: TsneParams) -> np.ndarray:
    """PCA pre-reduction followed by t-SNE; coordinates persisted under run_id.

    pca_k is silently clamped to min(pca_k, n, d); labels start unset.
    """
    ids, rows = store.embedding_matrix(model_tag)
    if len(ids) < 4:
        raise InsufficientDataError(
            f"projection needs at least 4 embedded posts, found {len(ids)}")
    matrix = EmbeddingMatrix(rows=rows, post_ids=tuple(ids))
    k = min(pca_k, matrix.rows.shape[0], matrix.rows.shape[1])
    model = pca_fit(matrix.rows, k)
    reduced = pca_transform(model, matrix.rows)
    coords = tsne_project(reduced, tsne_params)
    store.create_projection_run(
        run_id, model_tag, pca_k,
        json.dumps({
            "perplexity": tsne_params.perplexity,
            "learning_rate": tsne_params.learning_rate,
            "iterations": tsne_params.iterations,
            "early_exaggeration_factor": tsne_params.early_exaggeration_factor,
            "early_exaggeration_iters": tsne_params.early_exaggeration_iters,
            "effective_pca_k": k,
        }, sort_keys=True),
        tsne_params.seed)
    store.save_projection(run_id, list(matrix.post_ids), coords)
    return coords


def recluster(store: Store, run_id: str, params: DbscanParams) -> ClusterAssignment:
    """Re-run DBSCAN on stored coordinates; resets exclusion flags."""
    rows = store.projection_rows(run_id)
    if not rows:
        raise InsufficientDataError(f"run {run_id!r} has no coordinates")
    points = np.array([[r.x, r.y] for r in rows])
    assignment = dbscan(points, params)
    store.overwrite_labels(
        run_id, {row.post_id: label for row, label in zip(rows, assignment.labels)})
    return assignment


def set_excluded(store: Store, run_id: str, cluster_labels: list[int],
                 excluded: bool) -> int:
    return store.set_excluded(run_id, cluster_labels, excluded)
