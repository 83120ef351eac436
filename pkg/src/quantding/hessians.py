"""Hessians of the Ding functional and of its quantization."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .functionals import (
    Embedding,
    FD_STEP,
    HamiltonianField,
    ding,
    fs_pairing,
    q_ding,
    second_derivative,
    tangential_split,
)
from .geometry import canonical_measure, grad_pair, ma_measure, ricci_potential
from .quantization import FSPotential, as_function, hermitian

KERNEL_THRESHOLD = 1e-8
GAP_RATIO = 1e3
MAX_SPECTRUM_DIM = 10_000


def ding_hessian(f, g, phi, grid):
    """int Re(df, dg) mu - int f g mu + int f mu int g mu."""
    f, g = as_function(f), as_function(g)
    _, mu = canonical_measure(phi, grid)
    fv = f.series(grid, 0).value.real
    gv = fv if g is f else g.series(grid, 0).value.real
    pair = grad_pair(f, g, phi, grid).real
    avg = lambda v: grid.integrate(mu * v)
    return avg(pair) - avg(fv * gv) + avg(fv) * avg(gv)


def ding_second_derivative_along_path(f, phi, grid):
    """d^2/dt^2 D(phi + t f) at 0 along the linear path (phi'' = 0).

    Differs from :func:`ding_hessian` by int |df|^2 (mu_phi - MA(phi)/2), the
    geodesic correction; the two agree at Kahler-Einstein metrics.
    """
    f = as_function(f)
    ma = ma_measure(phi, grid)
    _, mu = canonical_measure(phi, grid)
    eh = np.exp(ricci_potential(phi, grid))
    grad2 = grad_pair(f, f, phi, grid).real
    fv = f.series(grid, 0).value.real
    avg = lambda d, v: grid.integrate(d * v)
    first = -avg(ma, -grad2 * (0.5 - eh))
    return first + avg(mu, grad2) - avg(mu, fv * fv) + avg(mu, fv) ** 2


def ding_second_derivative_fd(f, phi, grid, h=FD_STEP):
    f = as_function(f)
    return second_derivative(lambda t: ding(phi.shifted(f, t), phi, grid), h)


def q_ding_hessian(A, B, H0, grid, method="formula", embedding=None):
    """Hessian of the quantized Ding functional at H0.

    ``method="formula"`` pairs the induced vector fields directly;
    ``method="trace"`` uses H(A)H(B) + (xi_A, xi_B) = tr(ABM).
    """
    if method not in ("formula", "trace"):
        raise ValueError(f"unknown method {method!r}")
    emb = embedding or Embedding(H0, grid)
    k = H0.k
    A, B = hermitian(A), hermitian(B)
    HA = emb.hamiltonian(A)
    HB = HA if B is A else emb.hamiltonian(B)
    cross = emb.average(HA) * emb.average(HB) / k**2
    if method == "formula":
        pair = fs_pairing(A, B, emb.U).real
        return emb.average(pair) / k - emb.average(HA * HB) / k**2 + cross
    sym = emb.hamiltonian((A @ B + B @ A) / 2)
    return emb.average(sym) / k - (1 + 1 / k) * emb.average(HA * HB) / k + cross


def q_ding_hessian_fd(A, H0, grid, h=FD_STEP):
    """Second difference of D^(k) along the Bergman geodesic exp(tA/2)."""
    return second_derivative(lambda t: q_ding(H0.transformed(A, t), H0, grid), h)


@dataclass
class HessianReport:
    k: int
    values: dict = field(default_factory=dict)

    @property
    def residual(self):
        v = list(self.values.values())
        scale = max(max(abs(x) for x in v), 1e-300)
        return max(abs(a - b) for a in v for b in v) / scale


def hessian_report(A, H0, grid, h=FD_STEP):
    emb = Embedding(H0, grid)
    return HessianReport(
        H0.k,
        {
            "closed-form": q_ding_hessian(A, A, H0, grid, "formula", emb),
            "trace-form": q_ding_hessian(A, A, H0, grid, "trace", emb),
            "fd-geodesic": q_ding_hessian_fd(A, H0, grid, h),
        },
    )


def base_normal_split(A, H0, grid):
    """(total, base, normal): Ding Hessian of H(A)/k at FS_k(H0) plus the normal part."""
    k = H0.k
    emb = Embedding(H0, grid)
    total = q_ding_hessian(A, A, H0, grid, "formula", emb)
    field_ = HamiltonianField(A, H0)
    base = ding_hessian(field_, field_, FSPotential(H0), grid) / k**2
    _, perp = tangential_split(A, H0, grid)
    normal = emb.average(perp) / k
    return total, base, normal


def hermitian_basis(N):
    """Basis of N x N Hermitian matrices, orthonormal for tr(AB)."""
    out = []
    for a in range(N):
        E = np.zeros((N, N), dtype=complex)
        E[a, a] = 1
        out.append(E)
    s = 1 / np.sqrt(2)
    for a in range(N):
        for b in range(a + 1, N):
            E = np.zeros((N, N), dtype=complex)
            E[a, b] = E[b, a] = s
            out.append(E)
            E = np.zeros((N, N), dtype=complex)
            E[a, b], E[b, a] = 1j * s, -1j * s
            out.append(E)
    return np.array(out)


def q_hessian_matrix(H0, grid):
    """Gram matrix of the quantized Hessian in :func:`hermitian_basis`."""
    N, k = H0.N, H0.k
    if N * N > MAX_SPECTRUM_DIM:
        raise ValueError(f"N^2 = {N * N} exceeds the spectrum size guard {MAX_SPECTRUM_DIM}")
    emb = Embedding(H0, grid)
    U, mu = emb.U, emb.mu
    E = hermitian_basis(N)
    # H(E_i) at every node, one row per basis element
    m = len(E)
    outer = (U.conj()[:, :, None] * U[:, None, :]).reshape(-1, N * N)
    HE = (E.reshape(m, N * N) @ outer.T).real
    Mbar = emb.center_of_mass()
    # tr(E_i E_j Mbar) = sum_ab E_i[a, b] (E_j Mbar)[b, a]
    F = np.swapaxes(E @ Mbar, 1, 2).reshape(m, N * N)
    t1 = (E.reshape(m, N * N) @ F.T).real
    Hmu = HE * mu
    t2 = Hmu @ HE.T
    avg = Hmu.sum(axis=1)
    G = t1 / k - (1 + 1 / k) * t2 / k + np.outer(avg, avg) / k**2
    return (G + G.T) / 2


def q_hessian_spectrum(H0, grid):
    return np.linalg.eigvalsh(q_hessian_matrix(H0, grid))


def kernel_count(eigenvalues, threshold=KERNEL_THRESHOLD, gap=GAP_RATIO):
    """(count below threshold, gap ratio); raises if the gap is ambiguous."""
    ev = np.sort(np.asarray(eigenvalues))
    n = int(np.sum(ev < threshold))
    if n == len(ev):
        raise ValueError("no eigenvalue above the kernel threshold")
    below = max(abs(ev[n - 1]), np.finfo(float).tiny) if n else np.finfo(float).tiny
    ratio = ev[n] / below
    if ratio < gap:
        raise ValueError(f"ambiguous spectral gap: ratio {ratio:.3e} < {gap:.0e}")
    return n, ratio
