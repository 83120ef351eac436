"""Hot node-sum kernels: compiled extension with a numpy fallback.

The compiled backend (``_kernels``) is used when importable, unless the
environment variable ``QUANTDING_PURE`` is set to a non-empty value.  Both
backends share the same block size and pairwise tree, so they agree to
rounding; only the compiled one is independent of the thread count bit for bit.
"""

from __future__ import annotations

import os

import numpy as np

BLOCK = 256

_threads = os.cpu_count() or 1


def _pairwise(parts):
    while parts.shape[0] > 1:
        m = parts.shape[0]
        half = m // 2
        merged = parts[0 : 2 * half : 2] + parts[1 : 2 * half : 2]
        if m % 2:
            merged = np.concatenate([merged, parts[m - 1 : m]], axis=0)
        parts = merged
    return parts[0]


def py_weighted_gram(V, w, threads=1):
    V = np.ascontiguousarray(V, dtype=complex)
    n, N = V.shape
    if n == 0:
        return np.zeros((N, N), dtype=complex)
    starts = range(0, n, BLOCK)
    parts = np.stack([(V[s : s + BLOCK] * w[s : s + BLOCK, None]).T @ V[s : s + BLOCK].conj() for s in starts])
    G = _pairwise(parts)
    return (G + G.conj().T) / 2


def py_hermitian_diag(Z, A, threads=1):
    return np.einsum("pa,pa->p", Z.conj(), Z @ A.T).real


try:
    if os.environ.get("QUANTDING_PURE"):
        raise ImportError("pure backend requested")
    from ._kernels import hermitian_diag as _c_hermitian_diag
    from ._kernels import weighted_gram as _c_weighted_gram

    BACKEND = "compiled"
except ImportError:
    _c_weighted_gram = _c_hermitian_diag = None
    BACKEND = "python"


def set_threads(n):
    global _threads
    _threads = max(int(n), 1)


def get_threads():
    return _threads


def weighted_gram(V, w):
    """Hermitian matrix sum_p w[p] V[p] V[p]^*  (V has one row per node)."""
    w = np.ascontiguousarray(w, dtype=float)
    if _c_weighted_gram is not None:
        return _c_weighted_gram(V, w, _threads)
    return py_weighted_gram(V, w)


def hermitian_diag(Z, A):
    """Re(Z[p]^* A Z[p]) for each row of Z."""
    if _c_hermitian_diag is not None:
        return _c_hermitian_diag(Z, A, _threads)
    return py_hermitian_diag(Z, np.asarray(A, dtype=complex))
