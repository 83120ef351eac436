import math

import numpy as np
import pytest

from quantding.errors import DegenerateMetricError
from quantding.geometry import (
    ROUND,
    MetricPotential,
    RicciField,
    canonical_measure,
    grad_pair,
    laplacian,
    ma_measure,
    make_grid,
    ricci_potential,
    scalar_curvature,
)
from quantding.hessians import ding_hessian
from quantding.polynomial import parse_expr


def test_grid_moments(grid):
    x = grid.ambient[:, 2]
    assert grid.integrate(np.ones(grid.size)) == pytest.approx(1, abs=1e-14)
    assert grid.integrate(x) == pytest.approx(0, abs=1e-14)
    assert grid.integrate(x * x) == pytest.approx(1 / 3, abs=1e-14)


def test_grid_guards():
    with pytest.raises(ValueError):
        make_grid(1, 8)
    with pytest.raises(ValueError):
        make_grid(4, 3)


def test_ambient_points_on_sphere(grid):
    assert np.allclose(np.linalg.norm(grid.ambient, axis=1), 1)
    assert np.allclose(grid.ambient[:, 2], grid.x)
    assert np.all(np.abs(grid.w) <= 1 + 1e-12)


def test_ma_mass(grid, bumped):
    for phi in (ROUND, bumped, MetricPotential(parse_expr("0.2*x1*x3 - 0.1*x2"))):
        assert grid.integrate(ma_measure(phi, grid)) == pytest.approx(2, abs=1e-12)


def test_canonical_measure_round(grid):
    mass, mu = canonical_measure(ROUND, grid)
    assert mass == pytest.approx(2 * math.pi, rel=1e-13)
    assert np.allclose(mu, 1)


def test_round_laplacian_and_gradient(grid):
    x3 = parse_expr("x3")
    x = grid.x
    assert np.allclose(laplacian(x3, ROUND, grid), -x, atol=1e-13)
    assert np.allclose(grad_pair(x3, x3, ROUND, grid).real, (1 - x * x) / 2, atol=1e-13)
    assert grid.integrate(grad_pair(x3, x3, ROUND, grid).real) == pytest.approx(1 / 3, abs=1e-13)


def test_round_ricci_and_scalar_curvature(grid):
    assert np.allclose(ricci_potential(ROUND, grid), -math.log(2), atol=1e-13)
    assert np.allclose(scalar_curvature(ROUND, grid), 1, atol=1e-12)


def test_perturbed_curvature_is_not_constant(grid, bumped):
    h = ricci_potential(bumped, grid)
    assert h.max() - h.min() > 1e-2
    S = scalar_curvature(bumped, grid)
    assert grid.integrate(S * ma_measure(bumped, grid)) == pytest.approx(2, abs=1e-10)
    north, south = np.argmax(grid.x), np.argmin(grid.x)
    assert abs(S[north] - S[south]) > 1e-2


def test_ricci_field_matches_ricci_potential(grid, bumped):
    field = RicciField(bumped, grid)
    assert np.allclose(field.series(grid, 0).value.real, ricci_potential(bumped, grid), atol=1e-12)


def test_degenerate_metric_is_rejected(grid):
    # x3 potential with coefficient beyond the positivity bound
    with pytest.raises(DegenerateMetricError):
        ma_measure(MetricPotential(parse_expr("-3*x3^2")), grid)


def test_chart_swap_consistency(grid, bumped):
    band = np.abs(grid.x) < 0.3
    swapped = grid.swap_charts(band, limit=2.0)
    f = parse_expr("x1*x3 + x2^2 - 0.4*x3")
    for fn in (
        lambda g: f.series(g, 0).value.real,
        lambda g: laplacian(f, bumped, g),
        lambda g: grad_pair(f, f, bumped, g).real,
        lambda g: ma_measure(bumped, g) / g.conformal * g.conformal,
    ):
        a, b = fn(grid), fn(swapped)
        assert np.allclose(a, b, atol=1e-11)
    # MA density w.r.t. mu_FS is a global function
    assert np.allclose(ma_measure(bumped, grid), ma_measure(bumped, swapped), atol=1e-11)


def test_quadrature_doubling(bumped):
    f = parse_expr("x3^2 + x1")
    coarse, fine = make_grid(32, 64), make_grid(64, 128)
    for fn in (
        lambda g: canonical_measure(bumped, g)[0],
        lambda g: ding_hessian(f, f, bumped, g),
        lambda g: g.integrate(laplacian(f, bumped, g) ** 2),
    ):
        assert fn(coarse) == pytest.approx(fn(fine), abs=1e-10)


def test_integration_by_parts(grid, bumped):
    rng = np.random.default_rng(1)
    monomials = ["x1", "x2", "x3", "x1*x2", "x3^2", "x1*x3", "x2^3", "x1^2*x3"]
    ma = ma_measure(bumped, grid)
    for _ in range(20):
        cf, cg = rng.normal(size=(2, len(monomials)))
        f = parse_expr(" + ".join(f"({a:.6f})*{m}" for a, m in zip(cf, monomials)))
        g = parse_expr(" + ".join(f"({a:.6f})*{m}" for a, m in zip(cg, monomials)))
        lhs = grid.integrate(laplacian(f, bumped, grid) * g.series(grid, 0).value.real * ma)
        rhs = -grid.integrate(grad_pair(f, g, bumped, grid).real * ma)
        assert lhs == pytest.approx(rhs, abs=1e-11)


def test_poincare_equality_cases(grid):
    for name in ("x1", "x2", "x3"):
        f = parse_expr(name)
        assert abs(ding_hessian(f, f, ROUND, grid)) < 1e-12
    x2 = parse_expr("x3^2")
    assert ding_hessian(x2, x2, ROUND, grid) == pytest.approx(8 / 45, abs=1e-12)
