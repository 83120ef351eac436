# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Node-sum kernels with a fixed reduction tree.

Each block of BLOCK consecutive nodes is summed sequentially; block partials
are then combined pairwise in index order.  The tree does not depend on the
thread count, so results are bitwise reproducible for any ``threads``.
"""

import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange

cnp.import_array()

DEF BLOCK = 256


cdef void _block_gram(const double[:, ::1] re, const double[:, ::1] im,
                      const double[::1] w, double complex[:, :, ::1] out,
                      Py_ssize_t b) noexcept nogil:
    # re/im are (N, n): node index contiguous, so the p-loop is a plain dot product
    cdef Py_ssize_t N = re.shape[0], n = re.shape[1]
    cdef Py_ssize_t start = b * BLOCK
    cdef Py_ssize_t stop = start + BLOCK
    cdef Py_ssize_t p, a, c
    cdef double sr, si, war, wai
    if stop > n:
        stop = n
    for a in range(N):
        for c in range(a, N):
            sr = 0.0
            si = 0.0
            for p in range(start, stop):
                war = w[p] * re[a, p]
                wai = w[p] * im[a, p]
                sr = sr + war * re[c, p] + wai * im[c, p]
                si = si + wai * re[c, p] - war * im[c, p]
            out[b, a, c] = sr + 1j * si


def _pairwise(parts):
    while parts.shape[0] > 1:
        m = parts.shape[0]
        half = m // 2
        merged = parts[0:2 * half:2] + parts[1:2 * half:2]
        if m % 2:
            merged = np.concatenate([merged, parts[m - 1:m]], axis=0)
        parts = merged
    return parts[0]


def weighted_gram(V, w, int threads=1):
    """sum_p w[p] V[p, :, None] * conj(V[p, None, :])."""
    V = np.asarray(V, dtype=np.complex128)
    cdef const double[:, ::1] rv = np.ascontiguousarray(V.real.T)
    cdef const double[:, ::1] iv = np.ascontiguousarray(V.imag.T)
    cdef const double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t N = rv.shape[0], n = rv.shape[1]
    cdef Py_ssize_t nblocks = (n + BLOCK - 1) // BLOCK
    if nblocks == 0:
        return np.zeros((N, N), dtype=np.complex128)
    parts = np.zeros((nblocks, N, N), dtype=np.complex128)
    cdef double complex[:, :, ::1] pv = parts
    cdef Py_ssize_t b
    for b in prange(nblocks, nogil=True, num_threads=max(threads, 1), schedule="static"):
        _block_gram(rv, iv, wv, pv, b)
    G = _pairwise(parts)
    out = np.triu(G, 1)
    out = out + out.conj().T
    out[np.diag_indices(N)] = G.diagonal().real
    return out


def hermitian_diag(Z, A, int threads=1):
    """Re(Z[p]^* A Z[p]) for every row p of Z, with A Hermitian.

    Uses Re(z^* A z) = sum_a A_aa |z_a|^2 + 2 sum_{a<c} Re(conj(z_a) A_ac z_c).
    """
    Z = np.asarray(Z, dtype=np.complex128)
    A = np.asarray(A, dtype=np.complex128)
    cdef const double[:, ::1] zr = np.ascontiguousarray(Z.real)
    cdef const double[:, ::1] zi = np.ascontiguousarray(Z.imag)
    cdef const double[:, ::1] ar = np.ascontiguousarray(A.real)
    cdef const double[:, ::1] ai = np.ascontiguousarray(A.imag)
    cdef Py_ssize_t n = zr.shape[0], N = zr.shape[1]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t p, a, c
    cdef double acc, off, xr, xi
    for p in prange(n, nogil=True, num_threads=max(threads, 1), schedule="static"):
        acc = 0.0
        off = 0.0
        for a in range(N):
            acc = acc + ar[a, a] * (zr[p, a] * zr[p, a] + zi[p, a] * zi[p, a])
            xr = 0.0
            xi = 0.0
            for c in range(a + 1, N):
                # (A_ac z_c), real and imaginary parts
                xr = xr + ar[a, c] * zr[p, c] - ai[a, c] * zi[p, c]
                xi = xi + ar[a, c] * zi[p, c] + ai[a, c] * zr[p, c]
            off = off + zr[p, a] * xr + zi[p, a] * xi
        ov[p] = acc + 2.0 * off
    return out
