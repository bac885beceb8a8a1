"""PCA via eigendecomposition of the sample covariance matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NumericError


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray  # (d,)
    components: np.ndarray  # (k, d), rows orthonormal
    explained_variance: np.ndarray  # (k,), non-increasing


def pca_fit(X: np.ndarray, k: int) -> PcaModel:
    """Top-k eigenvectors of the covariance of mean-centered X.

    Sign convention: the largest-magnitude coordinate of each component is
    made positive, so fits are reproducible across eigensolvers.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be a 2-D matrix")
    n, d = X.shape
    if not np.all(np.isfinite(X)):
        raise NumericError("non-finite values in PCA input")
    if not 1 <= k <= min(n, d):
        raise ValueError(f"k={k} out of range for {n}x{d} input")

    mean = X.mean(axis=0)
    centered = X - mean
    if n > 1:
        cov = (centered.T @ centered) / (n - 1)
    else:
        cov = np.zeros((d, d))
    eigenvalues, eigenvectors = np.linalg.eigh(cov)
    order = np.argsort(eigenvalues)[::-1][:k]
    variance = np.maximum(eigenvalues[order], 0.0)
    components = eigenvectors[:, order].T.copy()
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return PcaModel(mean=mean, components=components,
                    explained_variance=variance)


def pca_transform(model: PcaModel, X: np.ndarray) -> np.ndarray:
    """Project rows of X onto the fitted components: (X - mean) @ C.T."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.mean.shape[0]:
        raise ValueError(
            f"width {X.shape[1]} does not match model width {model.mean.shape[0]}")
    return (X - model.mean) @ model.components.T
