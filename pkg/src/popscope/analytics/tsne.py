"""Exact t-SNE to 2-D: bisection-matched perplexity, Student-t affinities,
momentum gradient descent with early exaggeration. Deterministic per seed."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NumericError
from . import kernels

PERPLEXITY_TOL = 1e-4
BISECTION_MAX_STEPS = 200
MOMENTUM_SWITCH_ITER = 250
MOMENTUM_EARLY = 0.5
MOMENTUM_LATE = 0.8


@dataclass(frozen=True)
class TsneParams:
    perplexity: float = 30.0
    learning_rate: float = 200.0
    iterations: int = 1000
    early_exaggeration_factor: float = 12.0
    early_exaggeration_iters: int = 250
    seed: int = 0

    def __post_init__(self):
        if self.perplexity <= 0:
            raise ValueError("perplexity must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        if self.early_exaggeration_factor < 1:
            raise ValueError("early_exaggeration_factor must be >= 1")
        if self.early_exaggeration_iters < 0:
            raise ValueError("early_exaggeration_iters must be >= 0")
        if self.seed < 0:
            raise ValueError("seed must be unsigned")


def joint_affinities(X: np.ndarray, perplexity: float):
    """Symmetrized affinity matrix P = (P_cond + P_cond.T) / 2n."""
    D = kernels.pairwise_sq_dists(X)
    cond, betas, achieved = kernels.perplexity_affinities(
        D, perplexity, PERPLEXITY_TOL, BISECTION_MAX_STEPS)
    n = X.shape[0]
    P = (cond + cond.T) / (2.0 * n)
    return P, betas, achieved


def _descend(P: np.ndarray, params: TsneParams, y0: np.ndarray):
    y = y0.copy()
    velocity = np.zeros_like(y)
    kl_history = np.zeros(params.iterations)
    for it in range(params.iterations):
        exaggerate = it < params.early_exaggeration_iters
        target = P * params.early_exaggeration_factor if exaggerate else P
        grad, kl = kernels.tsne_grad_kl(target, y)
        momentum = MOMENTUM_EARLY if it < MOMENTUM_SWITCH_ITER else MOMENTUM_LATE
        velocity = momentum * velocity - params.learning_rate * grad
        y = y + velocity
        y = y - y.mean(axis=0)
        kl_history[it] = kl
    return y, kl_history


def tsne_project(X: np.ndarray, params: TsneParams) -> np.ndarray:
    """Project an n x k matrix to n x 2, centered at the origin."""
    coords, _ = tsne_project_with_trace(X, params)
    return coords


def tsne_project_with_trace(X: np.ndarray, params: TsneParams):
    """As tsne_project, but also returns diagnostics for property tests."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if n < 4:
        raise ValueError("t-SNE needs at least 4 points")
    if not np.all(np.isfinite(X)):
        raise NumericError("non-finite values in t-SNE input")
    if params.perplexity > (n - 1) / 3.0:
        raise ValueError(
            f"perplexity {params.perplexity} too large for n={n} "
            f"(must be <= (n-1)/3)")
    P, betas, achieved = joint_affinities(X, params.perplexity)
    rng = np.random.default_rng(params.seed)
    y0 = rng.normal(0.0, 1e-2, size=(n, 2))  # N(0, 1e-4) variance
    coords, kl_history = _descend(P, params, y0)
    return coords, {
        "kl_history": kl_history,
        "betas": betas,
        "achieved_perplexity": achieved,
        "affinities": P,
    }
