"""Sections of O(2k) = -kK, the maps Hilb_k / FS_k, and Berezin-Toeplitz data.

Reference basis: monomials ``s_j = w^j (d/dw)^k``, j = 0..2k, in the North
chart; in the South chart ``s_j`` reads ``w'^(2k-j)`` up to the global sign
(-1)^k, which cancels in every sesquilinear quantity and is dropped.

Matrix conventions (column vectors throughout):

* a Hermitian form is stored by its Gram matrix ``G[a, b] = H(s_a, s_b)``;
* ``Z(p)`` is the vector of values of an orthonormal frame at p, so the
  pointwise products ``(s_a, s_b)(p)`` form the matrix ``Z Z^*``;
* operators (Q_{f,k}, T_{f,k}) are ``int F Z Z^* MA`` in the Hilb_k(phi0)
  orthonormal frame.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky, solve_triangular
from scipy.special import comb

from . import kernels
from .errors import IndefiniteFormError
from .geometry import Potential, curvature_density, laplacian, ma_measure
from .polynomial import Polynomial, parse_expr
from .series import holomorphic_product

PIVOT_THRESHOLD = 1e-12


def as_function(f):
    if isinstance(f, str):
        return parse_expr(f)
    if isinstance(f, (int, float)):
        return Polynomial.constant(f)
    return f


def hermitian(A):
    A = np.asarray(A, dtype=complex)
    return (A + A.conj().T) / 2


@dataclass(frozen=True)
class SectionBasis:
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")

    @property
    def N(self):
        return 2 * self.k + 1

    def exponents(self, nodes):
        j = np.arange(self.N)
        return np.where(nodes.north[:, None], j[None, :], 2 * self.k - j[None, :])

    def local_series(self, nodes, order=0):
        """Holomorphic Taylor coefficients, shape (order + 1, n_nodes, N)."""
        e = self.exponents(nodes)
        w0 = nodes.w[:, None]
        out = np.zeros((order + 1,) + e.shape, dtype=complex)
        for i in range(order + 1):
            ok = e >= i
            out[i] = np.where(ok, comb(e, i) * w0 ** np.where(ok, e - i, 0), 0.0)
        return out

    def local_values(self, nodes):
        return self.local_series(nodes, 0)[0]

    def weighted_values(self, phi, nodes):
        """Section values times e^{-k phi/2}: the rows give (s_a, s_b)(p) = V V^*."""
        loc = phi.local_series(nodes, 0).value.real
        return self.local_values(nodes) * np.exp(-0.5 * self.k * loc)[:, None]


class HermitianForm:
    """Positive-definite Hermitian form on H^0(O(2k)) in the monomial basis."""

    def __init__(self, G, k):
        G = hermitian(G)
        if G.shape != (2 * k + 1, 2 * k + 1):
            raise ValueError(f"Gram matrix shape {G.shape} does not match k = {k}")
        self.G = G
        self.k = k
        self._L = None

    def __repr__(self):
        return f"HermitianForm(k={self.k})"

    @property
    def N(self):
        return 2 * self.k + 1

    @property
    def basis(self):
        return SectionBasis(self.k)

    def cholesky(self):
        """Lower factor L with G = L L^*; doubles as the definiteness test."""
        if self._L is None:
            # monomial Gram diagonals span ~20 decades at k = 32: test pivots
            # of the unit-diagonal rescaling
            diag = self.G.diagonal().real
            if np.any(diag <= 0):
                raise IndefiniteFormError("non-positive diagonal entry")
            d = np.sqrt(diag)
            try:
                Ls = cholesky(self.G / np.outer(d, d), lower=True)
            except np.linalg.LinAlgError as exc:
                raise IndefiniteFormError(str(exc)) from None
            piv = np.abs(np.diag(Ls)) ** 2
            if piv.min() < PIVOT_THRESHOLD:
                raise IndefiniteFormError(f"pivot {piv.min():.3e} below threshold")
            self._L = d[:, None] * Ls
        return self._L

    def logdet(self):
        return 2.0 * float(np.sum(np.log(np.abs(np.diag(self.cholesky())))))

    def orthonormalize(self, V):
        """Values of an H-orthonormal frame from reference values V (rows = nodes)."""
        L = self.cholesky()
        lead = V.shape[:-1]
        flat = V.reshape(-1, V.shape[-1])
        Z = solve_triangular(L, flat.T, lower=True).T
        return Z.reshape(lead + (V.shape[-1],))

    def in_frame(self, other):
        """Matrix of ``self`` in the ``other``-orthonormal frame: L^-1 G L^-*."""
        L = other.cholesky()
        X = solve_triangular(L, self.G, lower=True)
        return hermitian(solve_triangular(L, X.conj().T, lower=True).conj().T)

    def scaled(self, c):
        return HermitianForm(self.G * c, self.k)

    def transformed(self, A, t):
        """The form H_{g(t)} with g(t) = exp(tA/2) acting on the H-orthonormal frame."""
        lam, U = np.linalg.eigh(hermitian(A))
        E = (U * np.exp(-t * lam)) @ U.conj().T
        L = self.cholesky()
        return HermitianForm(L @ E @ L.conj().T, self.k)

    def to_json(self):
        return matrix_to_json(self.G, self.k)

    @classmethod
    def from_json(cls, text):
        k, G = matrix_from_json(text)
        return cls(G, k)


def matrix_to_json(A, k):
    rows = [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(A)]
    return json.dumps({"k": k, "n": 1, "basis": "monomial-north", "matrix": rows})


def matrix_from_json(text):
    obj = json.loads(text) if isinstance(text, str) else text
    if obj.get("n") != 1 or obj.get("basis") != "monomial-north":
        raise ValueError("unsupported matrix header")
    A = np.array([[complex(re, im) for re, im in row] for row in obj["matrix"]])
    return obj["k"], A


def hilb(phi, k, grid):
    """Hilb_k(phi): Gram matrix of int |s|^2 e^{-k phi} MA(phi)."""
    V = SectionBasis(k).weighted_values(phi, grid)
    return HermitianForm(kernels.weighted_gram(V, grid.weights * ma_measure(phi, grid)), k)


class FSPotential(Potential):
    """FS_k(H) = (1/k) log(k^-1 sum_i |sigma_i|^2) with sigma an H-orthonormal basis."""

    def __init__(self, form):
        self.form = form
        self.k = form.k

    def __repr__(self):
        return f"FSPotential({self.form!r})"

    def _compute_series(self, nodes, order):
        coeffs = self.form.orthonormalize(self.form.basis.local_series(nodes, order))
        norm2 = holomorphic_product(coeffs, coeffs, order)
        return (norm2 * (1.0 / self.k)).log() * (1.0 / self.k)


def fs(form):
    return FSPotential(form)


class HilbertFrame:
    """Hilb_k(phi0) together with its orthonormal frame values on a grid."""

    def __init__(self, phi, k, grid):
        self.phi = phi
        self.k = k
        self.grid = grid
        self.ma = ma_measure(phi, grid)
        V = SectionBasis(k).weighted_values(phi, grid)
        self.form = HermitianForm(kernels.weighted_gram(V, grid.weights * self.ma), k)
        self.Z = self.form.orthonormalize(V)

    @property
    def N(self):
        return self.form.N

    def rho(self):
        return np.sum(np.abs(self.Z) ** 2, axis=1)

    def operator(self, values):
        """int F (s_a, s_b) MA(phi0) in the orthonormal frame."""
        return kernels.weighted_gram(self.Z, self.grid.weights * self.ma * values)

    def diagonal(self, A):
        """x -> sum_ab A_ab (s_b, s_a)(x), i.e. Z^* A Z per node."""
        A = np.asarray(A, dtype=complex)
        if np.allclose(A, A.conj().T, rtol=0, atol=1e-14 * max(1.0, np.abs(A).max())):
            return kernels.hermitian_diag(self.Z, A)
        return np.einsum("pa,ab,pb->p", self.Z.conj(), A, self.Z)


def bergman_rho(phi, k, grid):
    return HilbertFrame(phi, k, grid).rho()


def q_values(f, phi, k, grid):
    """Node values of k f - Delta_phi f."""
    f = as_function(f)
    return k * f.series(grid, 0).value.real - laplacian(f, phi, grid)


def q_matrix(f, phi, k, grid, frame=None):
    """Q_{f,k} = d/dt Hilb_k(phi - t f) at t = 0, in the Hilb_k(phi) frame."""
    frame = frame or HilbertFrame(phi, k, grid)
    return frame.operator(q_values(f, phi, k, grid))


def toeplitz(f, phi, k, grid, frame=None):
    frame = frame or HilbertFrame(phi, k, grid)
    return frame.operator(as_function(f).series(grid, 0).value.real)


def toeplitz_project(f, phi, k, grid, coeffs, frame=None):
    """Frame coefficients of the projection of f * s, s = sum_a coeffs[a] sigma_a."""
    T = toeplitz(f, phi, k, grid, frame)
    return T.T @ np.asarray(coeffs, dtype=complex)


def kernel_diagonals(f, g, phi, k, grid, frame=None):
    """(K_{f,k}, K_{f,g,k}) at the nodes."""
    frame = frame or HilbertFrame(phi, k, grid)
    Tf = toeplitz(f, phi, k, grid, frame)
    Tg = Tf if g is f else toeplitz(g, phi, k, grid, frame)
    Kf = frame.diagonal(Tf)
    Kfg = frame.diagonal(Tf @ Tg)
    if g is f:
        Kfg = np.real(Kfg)
    return Kf, Kfg


def fs_sup_oracle(form, nodes, n_samples=1000, rng=None):
    """Brute-force (1/k) log(k^-1 sup_s |s|^2_{k phi_FS} / H(s, s)) - phi_FS.

    Returns (random-sample maximum, value at the maximizing section).
    """
    rng = np.random.default_rng(rng)
    k = form.k
    V = form.basis.local_values(nodes) * np.exp(-0.5 * k * nodes.fs_series(0).value.real)[:, None]
    C = rng.normal(size=(n_samples, form.N)) + 1j * rng.normal(size=(n_samples, form.N))
    num = np.abs(C @ V.T) ** 2
    den = np.einsum("sa,ab,sb->s", C, form.G, C.conj()).real
    best = (num / den[:, None]).max(axis=0)
    # maximizer c = conj(G^-1 V)
    opt = np.linalg.solve(form.G, V.T).conj().T
    num_opt = np.abs(np.einsum("pa,pa->p", opt, V)) ** 2
    den_opt = np.einsum("pa,ab,pb->p", opt, form.G, opt.conj()).real
    to_u = lambda s: np.log(s / k) / k
    return to_u(best), to_u(num_opt / den_opt)
