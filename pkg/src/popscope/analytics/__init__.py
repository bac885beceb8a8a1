from .dbscan import ClusterAssignment, DbscanParams, dbscan
from .pca import PcaModel, pca_fit, pca_transform
from .pipeline import (
    EmbeddingMatrix,
    embed_posts,
    recluster,
    run_projection,
    set_excluded,
)
from .tsne import TsneParams, joint_affinities, tsne_project, tsne_project_with_trace

__all__ = [
    "ClusterAssignment",
    "DbscanParams",
    "dbscan",
    "PcaModel",
    "pca_fit",
    "pca_transform",
    "EmbeddingMatrix",
    "embed_posts",
    "recluster",
    "run_projection",
    "set_excluded",
    "TsneParams",
    "joint_affinities",
    "tsne_project",
    "tsne_project_with_trace",
]
