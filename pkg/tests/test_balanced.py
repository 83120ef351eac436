import numpy as np
import pytest

from quantding.balanced import balance, balance_step, balanced_vs_ke, fs_distance, normalize_det
from quantding.errors import IndefiniteFormError
from quantding.geometry import ROUND
from quantding.quantization import HermitianForm, hilb


def test_round_start_is_balanced(grid):
    trace = balance(hilb(ROUND, 4, grid), grid)
    assert trace.converged
    assert trace.iterates[0][1] < 1e-10
    assert len(trace.iterates) == 1


def test_perturbed_start_converges(grid, bumped):
    trace = balance(hilb(bumped, 4, grid), grid, max_iter=500, tol=1e-8)
    assert trace.converged
    assert trace.residuals[-1] < 1e-8
    assert np.all(np.diff(trace.residuals[3:]) <= 0)
    # D^(k) does not increase after the first step
    assert np.all(np.diff(trace.values[1:]) <= 1e-10)
    assert trace.form.logdet() == pytest.approx(0, abs=1e-10)


def test_fixed_point_consistency(grid, bumped):
    tol = 1e-8
    trace = balance(hilb(bumped, 3, grid), grid, tol=tol)
    nxt = balance_step(trace.form, grid)
    change = np.linalg.norm(nxt.G - trace.form.G) / np.linalg.norm(trace.form.G)
    assert change <= 10 * tol * trace.form.N


def test_unconverged_run_is_flagged(grid, bumped):
    trace = balance(hilb(bumped, 4, grid), grid, max_iter=3)
    assert not trace.converged
    assert len(trace.iterates) == 4


def test_singular_start_raises(grid):
    v = np.arange(1.0, 6.0)
    with pytest.raises(IndefiniteFormError):
        balance(HermitianForm(np.outer(v, v), 2), grid)
    with pytest.raises(ValueError):
        balance(hilb(ROUND, 2, grid), grid, tol=0)


def test_reversal_equivariance(grid, bumped):
    # j -> 2k - j comes from w -> 1/w, a symmetry of the quadrature grid
    H = hilb(bumped, 3, grid)
    P = np.eye(H.N)[::-1]
    a = balance(H, grid, max_iter=6)
    b = balance(HermitianForm(P @ H.G @ P, 3), grid, max_iter=6)
    assert np.allclose(a.residuals, b.residuals, atol=1e-12)
    assert np.allclose(a.values, b.values, atol=1e-12)
    assert np.allclose(P @ a.form.G @ P, b.form.G, atol=1e-12)


def test_distance_ignores_scale(grid, bumped):
    form = hilb(bumped, 4, grid)
    assert fs_distance(form.scaled(7.0), grid) == pytest.approx(fs_distance(form, grid), abs=1e-13)
    assert fs_distance(normalize_det(hilb(ROUND, 4, grid)), grid) < 1e-13


def test_balanced_vs_ke_table(grid, bumped):
    rows = balanced_vs_ke((2, 3), bumped, grid)
    assert [r[0] for r in rows] == [2, 3]
    assert all(r[2] for r in rows)
    assert balanced_vs_ke((2,), ROUND, grid)[0][1] < 1e-12
