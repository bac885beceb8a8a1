"""Kernel backend selection: compiled extension when available, NumPy otherwise.

Set ``POPSCOPE_PURE_PYTHON=1`` to force the NumPy fallback. Tests and the
benchmark switch backends explicitly via :func:`use` / :func:`temporary_backend`.
"""

from __future__ import annotations

import os
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable

from . import kernels_numpy

try:
    from .. import _ckernels
except ImportError:  # extension not built; NumPy twin carries the load
    _ckernels = None


@dataclass(frozen=True)
class KernelBackend:
    name: str
    pairwise_sq_dists: Callable
    perplexity_affinities: Callable
    tsne_grad_kl: Callable


_NUMPY = KernelBackend(
    "numpy",
    kernels_numpy.pairwise_sq_dists,
    kernels_numpy.perplexity_affinities,
    kernels_numpy.tsne_grad_kl,
)

_BACKENDS = {"numpy": _NUMPY}
if _ckernels is not None:
    _BACKENDS["cython"] = KernelBackend(
        "cython",
        _ckernels.pairwise_sq_dists,
        _ckernels.perplexity_affinities,
        _ckernels.tsne_grad_kl,
    )


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def get_backend(name: str) -> KernelBackend:
    if name not in _BACKENDS:
        raise ValueError(f"unknown kernel backend {name!r}; "
                         f"available: {available_backends()}")
    return _BACKENDS[name]


def _default_name() -> str:
    if os.environ.get("POPSCOPE_PURE_PYTHON") == "1" or "cython" not in _BACKENDS:
        return "numpy"
    return "cython"


_active = _BACKENDS[_default_name()]


def active() -> KernelBackend:
    return _active


def use(name: str) -> KernelBackend:
    global _active
    _active = get_backend(name)
    return _active


@contextmanager
def temporary_backend(name: str):
    previous = _active.name
    use(name)
    try:
        yield _active
    finally:
        use(previous)


def pairwise_sq_dists(X):
    return _active.pairwise_sq_dists(X)


def perplexity_affinities(D, perplexity, tol=1e-4, max_steps=200):
    return _active.perplexity_affinities(D, perplexity, tol, max_steps)


def tsne_grad_kl(P, Y):
    return _active.tsne_grad_kl(P, Y)
