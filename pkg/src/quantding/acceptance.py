"""The acceptance suite: ten numbered criteria, each a list of checks."""

from __future__ import annotations

import math
from math import factorial

import numpy as np

from .asymptotics import (
    DEFAULT_KLIST,
    a_terms,
    fit_expansion,
    hessian_convergence,
    quantized_hessian,
    verify_h_expansion,
    verify_kernel_coefficients,
)
from .balanced import balance
from .functionals import (
    Embedding,
    derivative,
    ding,
    ding_gradient,
    fs_pairing,
    grad_q_ding_check,
    hamiltonian,
    lfunc_second_variation,
    moment,
    q_energy,
    second_derivative,
)
from .geometry import ROUND, MetricPotential, make_grid, ricci_potential
from .hessians import (
    base_normal_split,
    hessian_report,
    kernel_count,
    q_hessian_spectrum,
    ding_hessian,
)
from .polynomial import parse_expr
from .quantization import HilbertFrame, bergman_rho, hermitian, hilb, q_matrix
from .reporting import at_least, at_most, equals, holds, logged, within

PERTURBED = "0.3*x3"
SECOND_BASE = "0.3*x3 + 0.2*x1^2"


def perturbed(expr=PERTURBED):
    return MetricPotential(parse_expr(expr))


def random_hermitian(rng, N):
    X = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
    A = hermitian(X)
    return A / np.linalg.norm(A)


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def criterion_1(grid, seed=0):
    checks = []
    for k in (4, 8, 16, 32):
        rho = bergman_rho(ROUND, k, grid)
        checks.append(at_most(f"rho_k={k} - (2k+1)/2", np.max(np.abs(rho - (2 * k + 1) / 2)), 1e-10))
    samples = [(k, bergman_rho(ROUND, k, grid)) for k in DEFAULT_KLIST]
    fit = fit_expansion(samples, 1, 1)
    checks.append(at_most("b0 - 1", np.max(np.abs(fit.coeffs[0] - 1)), 1e-3))
    checks.append(at_most("b1 - 1/2", np.max(np.abs(fit.coeffs[1] - 0.5)), 1e-2))
    return checks


def criterion_2(grid, seed=0):
    rep = verify_kernel_coefficients("x3", ROUND, grid)
    return [
        at_most("b_f0 vs f (rel sup)", rep.errors["b_f0"], 0.01),
        at_most("b_f1 vs S f/2 + Lf (rel sup)", rep.errors["b_f1"], 0.05),
        at_most("b_ff0 vs f^2 (rel sup)", rep.errors["b_ff0"], 0.01),
        logged("fitted gradient factor c in b_ff1", rep.grad_factor),
        logged("b_ff1 error, c = 1", rep.errors["b_ff1[c=1]"]),
        logged("b_ff1 error, c = 2", rep.errors["b_ff1[c=2]"]),
    ]


def criterion_3(grid, seed=0, n_random=10):
    rng = np.random.default_rng(seed)
    checks = []
    for label, phi in (("round", ROUND), ("second base", perturbed(SECOND_BASE))):
        for k in (4, 8):
            H0 = hilb(phi, k, grid)
            worst = 0.0
            for _ in range(n_random):
                worst = max(worst, hessian_report(random_hermitian(rng, H0.N), H0, grid).residual)
            checks.append(at_most(f"three-way residual, {label}, k={k}", worst, 1e-6))
    return checks


def criterion_4(grid, seed=0):
    checks = []
    for k in (2, 4, 8):
        ev = q_hessian_spectrum(hilb(ROUND, k, grid), grid)
        checks.append(at_least(f"min eigenvalue k={k}", ev.min(), -1e-9))
        try:
            n, gap = kernel_count(ev)
        except ValueError:
            n, gap = int(np.sum(ev < 1e-8)), 0.0
        checks.append(equals(f"kernel dimension k={k}", n, 4))
        checks.append(at_least(f"gap ratio k={k}", gap, 1e3))
    return checks


def criterion_5(grid, seed=0, n_random=5):
    rng = np.random.default_rng(seed)
    checks = []
    for label, phi in (("round", ROUND), ("perturbed", perturbed())):
        H0 = hilb(phi, 4, grid)
        worst = 0.0
        for _ in range(n_random):
            total, base, normal = base_normal_split(random_hermitian(rng, H0.N), H0, grid)
            worst = max(worst, _rel(base + normal, total))
        checks.append(at_most(f"total - (base + normal), {label}", worst, 1e-8))
    k = 4
    frame = HilbertFrame(ROUND, k, grid)
    worst = 0.0
    for f in ("x1", "x2", "x3", "1"):
        Q = q_matrix(f, ROUND, k, grid, frame)
        worst = max(worst, abs(base_normal_split(Q, frame.form, grid)[2]))
    checks.append(at_most("normal term, automorphism directions", worst, 1e-10))
    return checks


def criterion_6(grid, seed=0):
    checks = []
    table = hessian_convergence("x3^2", ROUND, grid)
    errs = table.errors()
    checks.append(at_most("limit - 8/45 (round)", abs(table.limit - 8 / 45), 1e-8))
    checks.append(holds("errors strictly decreasing (round)", errs[0] > errs[1] > errs[2], errs))
    checks.append(within("log-log slope (round)", table.slope, -1.5, -0.7))

    table_x = hessian_convergence("x3", ROUND, grid)
    checks.append(at_most("max |Hessian(Q_x)| (round)", max(abs(r[1]) for r in table_x.rows), 1e-10))

    table_p = hessian_convergence("x3^2", perturbed(), grid)
    errs = table_p.errors()
    checks.append(holds("errors strictly decreasing (perturbed)", errs[0] > errs[1] > errs[2], errs))
    ks = np.array([r[0] for r in table_p.rows], dtype=float)
    D = np.stack([ks**0, 1 / ks, 1 / ks**2], axis=1)
    extrapolated = np.linalg.solve(D, [r[1] for r in table_p.rows])[0]
    checks.append(at_most("extrapolated limit vs quadrature (perturbed, rel)", _rel(extrapolated, table_p.limit), 5e-3))
    checks.append(logged("log-log slope (perturbed)", table_p.slope))
    return checks


def criterion_7(grid, seed=0):
    checks = []
    worst = 0.0
    for k in DEFAULT_KLIST:
        for f in ("x3", "x3^2", "x1 + x3^2"):
            t = a_terms(f, ROUND, k, grid)
            worst = max(worst, abs(t.total - quantized_hessian(f, f, ROUND, k, grid)))
    checks.append(at_most("A1 + A2 + A3 - Hessian", worst, 1e-10))
    worst = 0.0
    for k in (1, 4, 8):
        t = a_terms("1", ROUND, k, grid)
        worst = max(worst, abs(t.A1 - k), abs(t.A2 + k + 1), abs(t.A3 - 1))
    checks.append(at_most("f = 1 terms vs (k, -k-1, 1)", worst, 1e-10))
    fit = fit_expansion([(k, a_terms("x3", ROUND, k, grid).A1) for k in DEFAULT_KLIST], 1, 2)
    checks.append(at_most("A1 leading coefficient vs int f^2 mu (rel)", _rel(fit.coeffs[0], 1 / 3), 0.02))
    checks.append(at_most("A1 constant coefficient vs int |df|^2 mu (rel)", _rel(fit.coeffs[1], 1 / 3), 0.02))
    rep = verify_h_expansion("x3", ROUND, grid)
    checks.append(at_most("H(Q) slope vs f (rel sup)", rep.slope_error, 0.01))
    checks.append(at_most("H(Q) constant term (rel sup)", rep.constant_term, 0.02))
    checks.append(at_most("mass ratio decay power", rep.mass_power, -1.9))
    return checks


def criterion_8(grid, seed=0):
    rng = np.random.default_rng(seed)
    checks = []
    worst = 0.0
    for _ in range(100):
        N = int(rng.integers(2, 10))
        A, B = random_hermitian(rng, N), random_hermitian(rng, N)
        Z = rng.normal(size=N) + 1j * rng.normal(size=N)
        lhs = hamiltonian(A, Z) * hamiltonian(B, Z) + fs_pairing(A, B, Z)
        rhs = np.trace(A @ B @ moment(Z))
        worst = max(worst, abs(lhs - rhs))
    checks.append(at_most("pointwise Hamiltonian identity", worst, 1e-12))

    k = 4
    H0 = hilb(perturbed(), k, grid)
    A = random_hermitian(rng, H0.N)
    curv = second_derivative(lambda t: q_energy(H0.transformed(A, t), H0))
    checks.append(at_most("second difference of E^(k) along a geodesic", abs(curv), 1e-8))

    phi = perturbed()
    f = parse_expr("x3^2 + 0.5*x1")
    fd = derivative(lambda t: ding(phi.shifted(f, t), phi, grid))
    checks.append(at_most("gradient of D vs difference (rel)", _rel(ding_gradient(phi, f, grid), fd), 1e-6))
    fd, pairing = grad_q_ding_check(H0, A, grid)
    checks.append(at_most("gradient of D^(k) vs difference (abs)", abs(pairing - fd), 1e-6))
    exact = lfunc_second_variation(H0, A, grid)
    fd = second_derivative(lambda t: Embedding(H0.transformed(A, t), grid).lfunc())
    checks.append(at_most("second variation of L vs difference (rel)", _rel(exact, fd), 1e-6))
    return checks


def criterion_9(grid, seed=0):
    round_trace = balance(hilb(ROUND, 4, grid), grid)
    trace = balance(hilb(perturbed(), 4, grid), grid, max_iter=500, tol=1e-8)
    return [
        at_most("round start residual at step 0", round_trace.iterates[0][1], 1e-10),
        holds("perturbed start converged", trace.converged, len(trace.iterates) - 1),
        at_most("perturbed start final residual", trace.iterates[-1][1], 1e-8),
    ]


def criterion_10(grid, seed=0):
    checks = []
    worst = max(abs(ding_hessian(parse_expr(x), parse_expr(x), ROUND, grid)) for x in ("x1", "x2", "x3"))
    checks.append(at_most("Hessian(x_i, x_i) at round", worst, 1e-10))
    x2 = parse_expr("x3^2")
    checks.append(at_most("Hessian(x^2, x^2) - 8/45", abs(ding_hessian(x2, x2, ROUND, grid) - 8 / 45), 1e-8))
    h = ricci_potential(ROUND, grid)
    checks.append(at_most("Ricci potential + log 2", np.max(np.abs(h + math.log(2))), 1e-12))
    worst = 0.0
    for k in (1, 4, 8, 16, 32):
        diag = hilb(ROUND, k, grid).G.diagonal().real
        exact = np.array([2 * factorial(j) * factorial(2 * k - j) / factorial(2 * k + 1) for j in range(2 * k + 1)])
        worst = max(worst, np.max(np.abs(diag / exact - 1)))
    checks.append(at_most("Gram diagonal vs factorial formula (rel)", worst, 1e-12))
    return checks


CRITERIA = {
    1: ("Bergman function and its coefficients", criterion_1),
    2: ("Toeplitz kernel coefficients", criterion_2),
    3: ("Hessian formula, three-way agreement", criterion_3),
    4: ("convexity and kernel of the quantized Hessian", criterion_4),
    5: ("base plus normal decomposition", criterion_5),
    6: ("Hessian convergence", criterion_6),
    7: ("A-term identities and expansions", criterion_7),
    8: ("exact identities", criterion_8),
    9: ("balanced metrics", criterion_9),
    10: ("foundation checks", criterion_10),
}


def run_criterion(number, grid=None, seed=0):
    grid = grid if grid is not None else make_grid()
    return CRITERIA[number][1](grid, seed)


def run_all(grid=None, seed=0):
    grid = grid if grid is not None else make_grid()
    return {n: run_criterion(n, grid, seed) for n in CRITERIA}
