# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: pairwise distances, bandwidth search, t-SNE gradient.

Kept in lockstep with popscope.analytics.kernels_numpy — same math, same
tolerances, same saturation rules. The selection shim prefers this module
when it imported successfully.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, log

from popscope.errors import NumericError

cnp.import_array()

cdef double BETA_MIN = 1e-200
cdef double BETA_MAX = 1e200


def pairwise_sq_dists(X_in):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] X = np.ascontiguousarray(X_in, dtype=np.float64)
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] D = np.zeros((n, n), dtype=np.float64)
    cdef Py_ssize_t i, j, k
    cdef double acc, diff
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                acc = 0.0
                for k in range(d):
                    diff = X[i, k] - X[j, k]
                    acc += diff * diff
                D[i, j] = acc
                D[j, i] = acc
    return D


cdef double _row_perplexity(double[::1] dists, double beta, double[::1] p_out) nogil:
    """Fill p_out with conditional affinities; return realized 2^H."""
    cdef Py_ssize_t m = dists.shape[0]
    cdef Py_ssize_t j
    cdef double dmin = dists[0]
    cdef double z = 0.0, mean_shifted = 0.0, h_nat
    for j in range(1, m):
        if dists[j] < dmin:
            dmin = dists[j]
    for j in range(m):
        p_out[j] = exp(-beta * (dists[j] - dmin))
        z += p_out[j]
    for j in range(m):
        p_out[j] /= z
        mean_shifted += (dists[j] - dmin) * p_out[j]
    h_nat = log(z) + beta * mean_shifted
    return exp(h_nat)


def perplexity_affinities(D_in, double perplexity, double tol=1e-4, int max_steps=200):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] D = np.ascontiguousarray(D_in, dtype=np.float64)
    cdef Py_ssize_t n = D.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] P = np.zeros((n, n), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] betas = np.zeros(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] achieved = np.zeros(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] row = np.empty(n - 1, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] p_row = np.empty(n - 1, dtype=np.float64)
    cdef double[::1] row_v = row, p_v = p_row
    cdef Py_ssize_t i, j, idx, fail = -1
    cdef double beta, lo, hi, perp, prev_perp
    cdef bint done, one_sided
    cdef int step
    with nogil:
        for i in range(n):
            idx = 0
            for j in range(n):
                if j != i:
                    row_v[idx] = D[i, j]
                    idx += 1
            beta = 1.0
            lo = 0.0
            hi = -1.0  # -1 encodes "unbounded"
            done = False
            prev_perp = -1.0
            for step in range(max_steps):
                perp = _row_perplexity(row_v, beta, p_v)
                if fabs(perp - perplexity) <= tol:
                    done = True
                    break
                one_sided = hi < 0.0 or lo == 0.0
                if one_sided and perp == prev_perp:
                    done = True  # saturated: target unreachable
                    break
                prev_perp = perp
                if perp > perplexity:
                    lo = beta
                    beta = beta * 2.0 if hi < 0.0 else (beta + hi) / 2.0
                else:
                    hi = beta
                    beta = beta / 2.0 if lo == 0.0 else (beta + lo) / 2.0
                if beta > BETA_MAX or beta < BETA_MIN:
                    done = True
                    break
            if not done:
                fail = i
                break
            perp = _row_perplexity(row_v, beta, p_v)
            betas[i] = beta
            achieved[i] = perp
            idx = 0
            for j in range(n):
                if j != i:
                    P[i, j] = p_v[idx]
                    idx += 1
    if fail >= 0:
        raise NumericError(f"perplexity search did not converge for point {fail}")
    return P, betas, achieved


def tsne_grad_kl(P_in, Y_in):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] P = np.ascontiguousarray(P_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] Y = np.ascontiguousarray(Y_in, dtype=np.float64)
    cdef Py_ssize_t n = Y.shape[0], m = Y.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] W = np.empty((n, n), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] grad = np.zeros((n, m), dtype=np.float64)
    cdef Py_ssize_t i, j, k
    cdef double acc, diff, z = 0.0, q, pqw, kl = 0.0
    with nogil:
        for i in range(n):
            W[i, i] = 0.0
            for j in range(i + 1, n):
                acc = 0.0
                for k in range(m):
                    diff = Y[i, k] - Y[j, k]
                    acc += diff * diff
                acc = 1.0 / (1.0 + acc)
                W[i, j] = acc
                W[j, i] = acc
                z += 2.0 * acc
        for i in range(n):
            for j in range(n):
                if j == i:
                    continue
                q = W[i, j] / z
                pqw = (P[i, j] - q) * W[i, j]
                for k in range(m):
                    grad[i, k] += pqw * (Y[i, k] - Y[j, k])
                if P[i, j] > 0.0:
                    kl += P[i, j] * (log(P[i, j]) - log(q if q > 1e-12 else 1e-12))
            for k in range(m):
                grad[i, k] *= 4.0
    return grad, kl
