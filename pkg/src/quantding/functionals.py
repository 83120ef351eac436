"""Functionals on metrics and on Hermitian forms, and the projective layer.

Projective conventions: for ``Z`` in C^N (one row per point), the moment map is
``M = Z Z^* / |Z|^2``, the Hamiltonian of a Hermitian ``A`` is
``H(A) = tr(A M) = Z^* A Z / |Z|^2`` and the induced vector field of ``A`` is
the projection of ``Z -> A Z``.  A Bergman geodesic ``g(t) = exp(tA/2)`` moves
the orthonormal frame values to ``g(t) Z``.
"""

from __future__ import annotations

import math

import numpy as np

from . import kernels
from .geometry import ROUND, canonical_measure, ma_measure
from .quantization import FSPotential, SectionBasis, hermitian
from .series import holomorphic_product

FD_STEP = 1e-3


def derivative(fn, h=FD_STEP):
    """Five-point (Richardson-combined) central first difference at 0."""
    return (-fn(2 * h) + 8 * fn(h) - 8 * fn(-h) + fn(-2 * h)) / (12 * h)


def second_derivative(fn, h=FD_STEP):
    return (-fn(2 * h) + 16 * fn(h) - 30 * fn(0.0) + 16 * fn(-h) - fn(-2 * h)) / (12 * h * h)


# metrics --------------------------------------------------------------------


def energy(phi, ref, grid):
    """Monge-Ampere energy, n = 1: (1/4) int (phi - ref)(omega_phi + omega_ref)."""
    diff = phi.relative_values(grid) - ref.relative_values(grid)
    return 0.25 * grid.integrate(diff * (ma_measure(phi, grid) + ma_measure(ref, grid)))


def lfunc(phi, grid):
    mass, _ = canonical_measure(phi, grid)
    return -math.log(mass)


def ding(phi, ref, grid):
    return -energy(phi, ref, grid) + lfunc(phi, grid)


def ding_gradient(phi, f, grid):
    """int f (mu_phi - MA(phi)/2): the pairing of grad D with f."""
    _, mu = canonical_measure(phi, grid)
    fv = f.series(grid, 0).value.real
    return grid.integrate(fv * (mu - 0.5 * ma_measure(phi, grid)))


# Hermitian forms ------------------------------------------------------------


def q_energy(H, H0):
    """-(1/(k N)) log det(H H0^-1)."""
    return -(H.logdet() - H0.logdet()) / (H.k * H.N)


class Embedding:
    """X in CP^{N-1} through an H-orthonormal frame, with weights of mu_{FS_k(H)}."""

    def __init__(self, form, grid):
        self.form = form
        self.grid = grid
        self.k = form.k
        Z = form.orthonormalize(form.basis.weighted_values(ROUND, grid))
        self.norm2 = np.sum(np.abs(Z) ** 2, axis=1)
        self.U = Z / np.sqrt(self.norm2)[:, None]
        density = (self.norm2 / self.k) ** (-1.0 / self.k)  # e^{-(FS_k(H) - phi_FS)}
        total = grid.integrate(density)
        self.mass = 2 * math.pi * total
        self.mu = grid.weights * density / total

    @property
    def N(self):
        return self.form.N

    def lfunc(self):
        return -math.log(self.mass)

    def average(self, values):
        return np.sum(self.mu * values, axis=-1)

    def hamiltonian(self, A):
        return kernels.hermitian_diag(self.U, hermitian(A))

    def center_of_mass(self):
        return kernels.weighted_gram(self.U, self.mu)


def q_ding(H, H0, grid):
    return -q_energy(H, H0) + Embedding(H, grid).lfunc()


def moment(Z):
    Z = np.asarray(Z, dtype=complex)
    n2 = np.sum(np.abs(Z) ** 2, axis=-1)
    if np.any(n2 == 0):
        raise ValueError("zero vector has no projective class")
    return Z[..., :, None] * Z[..., None, :].conj() / n2[..., None, None]


def hamiltonian(A, Z):
    Z = np.asarray(Z, dtype=complex)
    n2 = np.sum(np.abs(Z) ** 2, axis=-1)
    if np.any(n2 == 0):
        raise ValueError("zero vector has no projective class")
    return np.einsum("...a,ab,...b->...", Z.conj(), A, Z).real / n2


def _unit(Z):
    Z = np.asarray(Z, dtype=complex)
    n = np.sqrt(np.sum(np.abs(Z) ** 2, axis=-1))
    if np.any(n == 0):
        raise ValueError("zero vector has no projective class")
    return Z / n[..., None]


def _horizontal(U, V):
    """Component of V orthogonal to the unit vector U."""
    return V - U * np.sum(U.conj() * V, axis=-1, keepdims=True)


def fs_pairing(A, B, Z):
    """Fubini-Study Hermitian pairing (xi_A, xi_B) at [Z] via horizontal lifts.

    Antilinear in the first slot; (xi_A, xi_A) = |xi_A|^2.
    """
    U = _unit(Z)
    PA = _horizontal(U, U @ np.asarray(A).T)
    PB = _horizontal(U, U @ np.asarray(B).T)
    return np.sum(PA.conj() * PB, axis=-1)


def center_of_mass(H, grid):
    return Embedding(H, grid).center_of_mass()


def q_ding_gradient(H, A, grid):
    """Killing pairing tr(A k^-1 (Mbar - Id/N)) of grad D^(k) with A."""
    Mbar = center_of_mass(H, grid)
    return float(np.trace(hermitian(A) @ (Mbar - np.eye(H.N) / H.N)).real / H.k)


def grad_q_ding_check(H, A, grid, h=FD_STEP):
    """(d/dt D^(k)(H_{g(t)}) at 0 by differences, gradient pairing)."""
    fd = derivative(lambda t: q_ding(H.transformed(A, t), H, grid), h)
    return fd, q_ding_gradient(H, A, grid)


def lfunc_second_variation(H, A, grid):
    """k^-1 int |xi_A|^2 mu - k^-2 int H(A)^2 mu + k^-2 (int H(A) mu)^2."""
    emb = Embedding(H, grid)
    k = H.k
    HA = emb.hamiltonian(A)
    xi2 = fs_pairing(A, A, emb.U).real
    return emb.average(xi2) / k - emb.average(HA**2) / k**2 + emb.average(HA) ** 2 / k**2


class HamiltonianField:
    """x -> H(A)(x) restricted to the embedded curve, with jets."""

    def __init__(self, A, form):
        self.A = hermitian(A)
        self.form = form

    def _frame(self, nodes, order):
        return self.form.orthonormalize(self.form.basis.local_series(nodes, order))

    def series(self, nodes, order=1):
        Z = self._frame(nodes, order)
        num = holomorphic_product(Z @ self.A.T, Z, order)
        den = holomorphic_product(Z, Z, order)
        return num / den


def tangential_split(A, H, grid):
    """(|xi_A^T|^2, |xi_A^perp|^2) at every node, FS norms on CP^{N-1}."""
    coeffs = H.orthonormalize(H.basis.local_series(grid, 1))
    Z, dZ = coeffs[0], coeffs[1]
    n = np.sqrt(np.sum(np.abs(Z) ** 2, axis=-1))[:, None]
    U, T = Z / n, dZ / n
    PT = _horizontal(U, T)
    PA = _horizontal(U, U @ hermitian(A).T)
    t2 = np.sum(np.abs(PT) ** 2, axis=-1)
    if np.any(t2 == 0):
        raise RuntimeError("embedding is not an immersion at some node")
    coef = np.sum(PT.conj() * PA, axis=-1) / t2
    top = np.abs(coef) ** 2 * t2
    perp = np.sum(np.abs(PA - coef[:, None] * PT) ** 2, axis=-1)
    return top, perp
