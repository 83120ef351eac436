"""Large-k sweeps: expansion fits, the A-term split and Hessian convergence.

All fits are least squares in the basis ``k^(n-i)``, i = 0..p, applied node by
node when the samples are arrays.  Tolerances on node-wise fields are taken
relative to the sup-norm of the target field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .functionals import Embedding
from .geometry import canonical_measure, grad_pair, laplacian, scalar_curvature
from .hessians import ding_hessian, q_ding_hessian
from .quantization import HilbertFrame, as_function, kernel_diagonals, q_matrix

DEFAULT_KLIST = (4, 6, 8, 12, 16, 24, 32)
RANK_RTOL = 1e-10


@dataclass
class ExpansionFit:
    n: int
    coeffs: np.ndarray  # shape (p + 1, *value_shape)
    residual: float
    klist: tuple

    @property
    def p(self):
        return len(self.coeffs) - 1

    def __call__(self, k):
        powers = float(k) ** (self.n - np.arange(self.p + 1))
        return np.tensordot(powers, self.coeffs, axes=1)


def fit_expansion(samples, n=1, p=1):
    """Fit ``value(k) ~ sum_i c_i k^(n-i)`` to ``(k, value)`` pairs."""
    samples = sorted(samples, key=lambda s: s[0])
    ks = np.array([float(k) for k, _ in samples])
    if len(ks) < p + 2:
        raise ValueError(f"need at least {p + 2} samples for order {p}, got {len(ks)}")
    if np.any(np.diff(ks) <= 0):
        raise ValueError("k values must be distinct")
    values = np.array([np.asarray(v, dtype=float) for _, v in samples])
    shape = values.shape[1:]
    design = ks[:, None] ** (n - np.arange(p + 1))[None, :]
    # column scaling keeps the conditioning independent of the k range
    scale = np.abs(design).max(axis=0)
    D = design / scale
    sv = np.linalg.svd(D, compute_uv=False)
    if sv[-1] < RANK_RTOL * sv[0]:
        raise ValueError("rank-deficient design: k-list too short or degenerate")
    Y = values.reshape(len(ks), -1)
    sol, *_ = np.linalg.lstsq(D, Y, rcond=None)
    coeffs = (sol / scale[:, None]).reshape((p + 1,) + shape)
    resid = float(np.max(np.abs(D @ sol - Y))) if Y.size else 0.0
    return ExpansionFit(n, coeffs, resid, tuple(int(k) for k in ks))


def loglog_slope(ks, errors):
    """Slope of log|error| against log k by least squares."""
    ks = np.asarray(ks, dtype=float)
    e = np.abs(np.asarray(errors, dtype=float))
    if np.any(e == 0):
        raise ValueError("zero error has no logarithm")
    return float(np.polyfit(np.log(ks), np.log(e), 1)[0])


def _rel_sup(a, b):
    """sup|a - b| / sup|b|, falling back to the absolute error for b = 0."""
    scale = float(np.max(np.abs(b)))
    err = float(np.max(np.abs(np.asarray(a) - b)))
    return err / scale if scale > 0 else err


@dataclass
class CoefficientReport:
    klist: tuple
    fit_f: ExpansionFit
    fit_ff: ExpansionFit
    errors: dict = field(default_factory=dict)
    grad_factor: float = float("nan")


def verify_kernel_coefficients(f, phi0, grid, klist=DEFAULT_KLIST, p=2):
    """Node-wise fits of K_{f,k} and K_{f,f,k} against the closed-form fields.

    The gradient term of the second K_{f,f} coefficient is written as
    ``(c/2) |df|^2`` with ``|df|^2`` the del-norm used throughout; ``c`` is fitted
    by least squares and the errors of both candidates c = 1, 2 are reported.
    """
    f = as_function(f)
    rows_f, rows_ff = [], []
    for k in klist:
        Kf, Kff = kernel_diagonals(f, f, phi0, k, grid, HilbertFrame(phi0, k, grid))
        rows_f.append((k, np.real(Kf)))
        rows_ff.append((k, np.real(Kff)))
    fit_f = fit_expansion(rows_f, 1, p)
    fit_ff = fit_expansion(rows_ff, 1, p)

    fv = f.series(grid, 0).value.real
    S = scalar_curvature(phi0, grid)
    lap = laplacian(f, phi0, grid)
    grad2 = grad_pair(f, f, phi0, grid).real
    b_f1 = 0.5 * S * fv + lap
    known = 0.5 * S * fv**2 + 2 * fv * lap
    resid = fit_ff.coeffs[1] - known
    denom = float(np.dot(0.5 * grad2, 0.5 * grad2))
    c = float(np.dot(resid, 0.5 * grad2) / denom) if denom > 0 else float("nan")

    errors = {
        "b_f0": _rel_sup(fit_f.coeffs[0], fv),
        "b_f1": _rel_sup(fit_f.coeffs[1], b_f1),
        "b_ff0": _rel_sup(fit_ff.coeffs[0], fv**2),
    }
    for cand in (1, 2):
        errors[f"b_ff1[c={cand}]"] = _rel_sup(fit_ff.coeffs[1], known + 0.5 * cand * grad2)
    return CoefficientReport(tuple(klist), fit_f, fit_ff, errors, c)


@dataclass
class ATerms:
    A1: float
    A2: float
    A3: float
    k: int
    tag: str = ""

    @property
    def total(self):
        return self.A1 + self.A2 + self.A3


def _quantized_setup(f, phi0, k, grid):
    frame = HilbertFrame(phi0, k, grid)
    Q = q_matrix(f, phi0, k, grid, frame)
    return frame.form, Q, Embedding(frame.form, grid)


def a_terms(f, phi0, k, grid, tag=""):
    """The three terms of the Hessian of D^(k) at Hilb_k(phi0) along Q_{f,k}."""
    f = as_function(f)
    _, Q, emb = _quantized_setup(f, phi0, k, grid)
    HQ = emb.hamiltonian(Q)
    A1 = emb.average(emb.hamiltonian(Q @ Q)) / k
    A2 = -(1 + 1 / k) * emb.average(HQ * HQ) / k
    A3 = emb.average(HQ) ** 2 / k**2
    return ATerms(float(A1), float(A2), float(A3), k, tag or repr(f))


def quantized_hessian(f, g, phi0, k, grid):
    """Hessian of D^(k) at Hilb_k(phi0) on (Q_{f,k}, Q_{g,k})."""
    f, g = as_function(f), as_function(g)
    frame = HilbertFrame(phi0, k, grid)
    Qf = q_matrix(f, phi0, k, grid, frame)
    Qg = Qf if g is f else q_matrix(g, phi0, k, grid, frame)
    return q_ding_hessian(Qf, Qg, frame.form, grid, "formula")


@dataclass
class HReport:
    klist: tuple
    fit: ExpansionFit
    slope_error: float
    constant_term: float
    mass_ratios: np.ndarray
    mass_power: float


def verify_h_expansion(f, phi0, grid, klist=DEFAULT_KLIST, p=2):
    """H(Q_{f,k}) = f k + O(1/k) node-wise, and the mass ratio of FS_k o Hilb_k."""
    f = as_function(f)
    fv = f.series(grid, 0).value.real
    mass0, _ = canonical_measure(phi0, grid)
    rows, ratios = [], []
    for k in klist:
        _, Q, emb = _quantized_setup(f, phi0, k, grid)
        rows.append((k, emb.hamiltonian(Q)))
        ratios.append(emb.mass / mass0 - 1)
    fit = fit_expansion(rows, 1, p)
    scale = max(float(np.max(np.abs(fv))), 1e-300)
    ratios = np.array(ratios)
    return HReport(
        tuple(klist),
        fit,
        _rel_sup(fit.coeffs[0], fv),
        float(np.max(np.abs(fit.coeffs[1]))) / scale,
        ratios,
        loglog_slope(klist, ratios),
    )


@dataclass
class ConvergenceTable:
    rows: list  # (k, quantized, limit, error)
    slope: float  # over the three largest k
    slope_all: float

    @property
    def limit(self):
        return self.rows[0][2]

    def errors(self):
        return [r[3] for r in self.rows]


def hessian_convergence(f, phi0, grid, klist=(8, 16, 32)):
    """Quantized Hessians along Q_{f,k} against the limit D''(f, f).

    The rate is read off the three largest k; the slope over every k is kept
    for reference since small k are strongly pre-asymptotic.
    """
    f = as_function(f)
    klist = tuple(sorted(klist))
    limit = float(ding_hessian(f, f, phi0, grid))
    rows = []
    for k in klist:
        value = float(quantized_hessian(f, f, phi0, k, grid))
        rows.append((k, value, limit, abs(value - limit)))
    errs = [r[3] for r in rows]
    if len(errs) < 2 or not all(e > 0 for e in errs):
        return ConvergenceTable(rows, -math.inf, -math.inf)
    return ConvergenceTable(rows, loglog_slope(klist[-3:], errs[-3:]), loglog_slope(klist, errs))
