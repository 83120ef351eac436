"""Fixed-point search for anticanonically balanced Hermitian forms.

One step replaces H by N k Mbar(H) written in the H-orthonormal frame, which
is the form N int (s, s')_{k FS_k(H)} mu_{FS_k(H)}; its fixed points up to
scale are exactly the forms with Mbar = Id/N.  Each iterate is rescaled to
unit determinant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import IndefiniteFormError
from .functionals import Embedding, q_energy
from .quantization import FSPotential, HermitianForm, hilb

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 500


def normalize_det(form):
    return form.scaled(np.exp(-form.logdet() / form.N))


def balance_residual(emb):
    Mbar = emb.center_of_mass()
    return float(np.linalg.norm(Mbar - np.eye(emb.N) / emb.N))


def balance_step(form, grid, embedding=None):
    """The next iterate (unit determinant) from ``form``."""
    emb = embedding or Embedding(form, grid)
    L = form.cholesky()
    G = L @ (form.N * form.k * emb.center_of_mass()) @ L.conj().T
    return normalize_det(HermitianForm(G, form.k))


@dataclass
class BalanceTrace:
    iterates: list = field(default_factory=list)  # (step, residual, q_ding)
    form: HermitianForm = None
    converged: bool = False

    @property
    def residuals(self):
        return np.array([r for _, r, _ in self.iterates])

    @property
    def values(self):
        return np.array([v for _, _, v in self.iterates])


def balance(H_init, grid, max_iter=DEFAULT_MAX_ITER, tol=DEFAULT_TOL):
    if tol <= 0:
        raise ValueError("tol must be positive")
    H_init.cholesky()  # raises on singular or indefinite input
    ref = H_init
    form = normalize_det(H_init)
    trace = BalanceTrace()
    for step in range(max_iter + 1):
        emb = Embedding(form, grid)
        res = balance_residual(emb)
        value = -q_energy(form, ref) + emb.lfunc()
        if not np.isfinite(res):
            raise IndefiniteFormError(f"non-finite residual at step {step}")
        trace.iterates.append((step, res, value))
        trace.form = form
        if res <= tol:
            trace.converged = True
            break
        if step == max_iter:
            break
        form = balance_step(form, grid, emb)
    return trace


def fs_distance(form, grid):
    """sup |FS_k(H) - phi_FS - c| with the best constant c removed."""
    u = FSPotential(form).relative_values(grid)
    return float((u.max() - u.min()) / 2)


def balanced_vs_ke(klist, start, grid, max_iter=DEFAULT_MAX_ITER, tol=DEFAULT_TOL):
    """Rows (k, distance to the round potential, converged, iterations)."""
    rows = []
    for k in klist:
        trace = balance(hilb(start, k, grid), grid, max_iter, tol)
        rows.append((k, fs_distance(trace.form, grid), trace.converged, len(trace.iterates) - 1))
    return rows

