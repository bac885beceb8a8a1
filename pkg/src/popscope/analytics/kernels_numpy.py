"""Pure-NumPy implementations of the hot numerical kernels.

These are the fallback twins of the compiled extension in
``popscope._ckernels``; both sides implement the same math with the same
tolerances and saturation rules, so either can back the public API.
"""

from __future__ import annotations

import numpy as np

from ..errors import NumericError

# Bandwidth search saturates (accepts the extremal bandwidth) once beta
# leaves this range; the target perplexity is unreachable for that point.
BETA_MIN = 1e-200
BETA_MAX = 1e200


def pairwise_sq_dists(X: np.ndarray) -> np.ndarray:
    """Dense matrix of squared Euclidean distances, zero diagonal."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    sq = np.einsum("ij,ij->i", X, X)
    D = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.maximum(D, 0.0, out=D)
    np.fill_diagonal(D, 0.0)
    return D


def _row_perplexity(dists: np.ndarray, beta: float) -> tuple[np.ndarray, float]:
    """Conditional affinities for one point and their perplexity 2^H."""
    shifted = dists - dists.min()
    p = np.exp(-beta * shifted)
    z = p.sum()
    p /= z
    h_nat = np.log(z) + beta * float(np.dot(shifted, p))
    return p, float(np.exp(h_nat))


def perplexity_affinities(D: np.ndarray, perplexity: float, tol: float = 1e-4,
                          max_steps: int = 200):
    """Per-point Gaussian bandwidths by bisection on the precision beta.

    Returns (P, betas, achieved) where P holds conditional affinities
    p(j|i) with zero diagonal and achieved[i] is the realized 2^H. When
    the target perplexity is outside the achievable range for a point the
    search saturates at an extremal bandwidth instead of failing; genuine
    non-convergence within ``max_steps`` raises naming the point.
    """
    n = D.shape[0]
    P = np.zeros((n, n))
    betas = np.zeros(n)
    achieved = np.zeros(n)
    mask = ~np.eye(n, dtype=bool)
    for i in range(n):
        dists = D[i][mask[i]]
        beta, lo, hi = 1.0, 0.0, np.inf
        done = False
        prev_perp = -1.0
        for _ in range(max_steps):
            p, perp = _row_perplexity(dists, beta)
            if abs(perp - perplexity) <= tol:
                done = True
                break
            one_sided = hi == np.inf or lo == 0.0
            if one_sided and perp == prev_perp:
                done = True  # saturated: target unreachable for this point
                break
            prev_perp = perp
            if perp > perplexity:  # too flat: raise precision
                lo = beta
                beta = beta * 2.0 if hi == np.inf else (beta + hi) / 2.0
            else:
                hi = beta
                beta = beta / 2.0 if lo == 0.0 else (beta + lo) / 2.0
            if beta > BETA_MAX or beta < BETA_MIN:
                done = True
                break
        if not done:
            raise NumericError(
                f"perplexity search did not converge for point {i}")
        p, perp = _row_perplexity(dists, beta)
        betas[i] = beta
        achieved[i] = perp
        P[i][mask[i]] = p
    return P, betas, achieved


def tsne_grad_kl(P: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, float]:
    """Gradient of KL(P || Q) under Student-t (1 dof) affinities, plus KL."""
    D2 = pairwise_sq_dists(Y)
    W = 1.0 / (1.0 + D2)
    np.fill_diagonal(W, 0.0)
    z = W.sum()
    Q = W / z
    PQW = (P - Q) * W
    grad = 4.0 * (PQW.sum(axis=1)[:, None] * Y - PQW @ Y)
    mask = P > 0
    kl = float(np.sum(P[mask] * (np.log(P[mask])
                                 - np.log(np.maximum(Q[mask], 1e-12)))))
    return grad, kl
