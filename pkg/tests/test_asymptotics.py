import numpy as np
import pytest

from quantding.asymptotics import (
    a_terms,
    fit_expansion,
    hessian_convergence,
    loglog_slope,
    quantized_hessian,
    verify_h_expansion,
    verify_kernel_coefficients,
)
from quantding.geometry import ROUND, make_grid
from quantding.quantization import bergman_rho


def test_fit_recovers_exact_polynomial():
    fit = fit_expansion([(k, 3 * k + 7) for k in (1, 2, 5)], n=1, p=1)
    assert np.allclose(fit.coeffs, [3, 7], atol=1e-10)
    assert fit(10) == pytest.approx(37)


def test_fit_is_vectorized_over_nodes():
    samples = [(k, np.array([k, 2 * k - 1, 0.5])) for k in (2, 4, 8)]
    fit = fit_expansion(samples, 1, 1)
    assert np.allclose(fit.coeffs, [[1, 2, 0], [0, -1, 0.5]], atol=1e-12)


def test_fit_with_tail():
    samples = [(k, 2.0 * k - 1.0 + 0.3 / k) for k in (8, 12, 16, 24, 32)]
    fit = fit_expansion(samples, 1, 1)
    assert fit.coeffs[0] == pytest.approx(2, rel=1e-2)


def test_fit_rejects_short_or_repeated_klist():
    with pytest.raises(ValueError):
        fit_expansion([(1, 1.0), (2, 2.0)], 1, 1)
    with pytest.raises(ValueError):
        fit_expansion([(2, 1.0), (2, 1.0), (3, 2.0)], 1, 1)


def test_loglog_slope():
    ks = np.array([4.0, 8.0, 16.0])
    assert loglog_slope(ks, 3 / ks**2) == pytest.approx(-2)
    with pytest.raises(ValueError):
        loglog_slope(ks, [1.0, 0.0, 1.0])


def test_bergman_coefficients(grid):
    fit = fit_expansion([(k, bergman_rho(ROUND, k, grid)) for k in (4, 8, 16, 32)], 1, 1)
    assert np.allclose(fit.coeffs[0], 1, atol=1e-10)
    assert np.allclose(fit.coeffs[1], 0.5, atol=1e-10)


def test_kernel_coefficients_of_constant(grid, bumped):
    rep = verify_kernel_coefficients("1", bumped, grid, (4, 6, 8, 12, 16))
    assert rep.errors["b_f0"] < 1e-3
    assert np.isnan(rep.grad_factor)


def test_gradient_factor_is_two(grid):
    rep = verify_kernel_coefficients("x3", ROUND, grid)
    assert rep.grad_factor == pytest.approx(2, abs=0.05)
    assert rep.errors["b_ff1[c=2]"] < rep.errors["b_ff1[c=1]"]


def test_a_terms_of_constant(grid, bumped):
    for k in (2, 5):
        t = a_terms("1", bumped, k, grid)
        assert (t.A1, t.A2, t.A3) == pytest.approx((k, -k - 1, 1), abs=1e-11)
        assert t.total == pytest.approx(0, abs=1e-11)


@pytest.mark.parametrize("f", ["x3^2", "x1 - x2*x3"])
def test_a_terms_sum_exactly(grid, bumped, f):
    for k in (3, 8):
        assert a_terms(f, bumped, k, grid).total == pytest.approx(quantized_hessian(f, f, bumped, k, grid), abs=1e-11)


def test_a1_at_round_for_height(grid):
    for k in (3, 7):
        assert a_terms("x3", ROUND, k, grid).A1 == pytest.approx(k / 3 + 1 / 3, abs=1e-12)


def test_quantized_hessian_symmetry(grid, bumped):
    for k in (4, 8):
        fg = quantized_hessian("x3^2", "x1 + x3", bumped, k, grid)
        gf = quantized_hessian("x1 + x3", "x3^2", bumped, k, grid)
        assert fg == pytest.approx(gf, abs=1e-10)


def test_h_expansion_at_perturbed_metric(grid, bumped):
    rep = verify_h_expansion("x3", bumped, grid, (8, 12, 16, 24, 32))
    assert rep.slope_error < 0.01
    assert rep.mass_power < -1.5


def test_fits_stable_under_grid_doubling(bumped):
    klist = (4, 6, 8, 12)
    coarse = verify_kernel_coefficients("x3", bumped, make_grid(), klist)
    fine = verify_kernel_coefficients("x3", bumped, make_grid(128, 256), klist)
    # compare the fitted fields through an exact-quadrature functional
    for a, b in ((coarse, fine),):
        for fit_a, fit_b in ((a.fit_f, b.fit_f), (a.fit_ff, b.fit_ff)):
            g1, g2 = make_grid(), make_grid(128, 256)
            assert np.allclose(g1.integrate(fit_a.coeffs), g2.integrate(fit_b.coeffs), atol=1e-6)


def test_convergence_table(grid):
    table = hessian_convergence("x3^2", ROUND, grid, (8, 16, 32))
    errs = table.errors()
    assert table.limit == pytest.approx(8 / 45, abs=1e-12)
    assert errs[0] > errs[1] > errs[2]
    assert -1.5 <= table.slope <= -0.7


def test_convergence_degenerate_direction(grid):
    table = hessian_convergence("x3", ROUND, grid, (4, 8))
    assert all(abs(r[1]) < 1e-12 for r in table.rows)
