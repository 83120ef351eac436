import math
from math import factorial

import numpy as np
import pytest

from quantding.errors import IndefiniteFormError
from quantding.geometry import ROUND, ma_measure
from quantding.quantization import (
    FSPotential,
    HermitianForm,
    HilbertFrame,
    bergman_rho,
    fs_sup_oracle,
    hilb,
    kernel_diagonals,
    q_matrix,
    toeplitz,
    toeplitz_project,
)


def gram_diagonal(k):
    return np.array([2 * factorial(j) * factorial(2 * k - j) / factorial(2 * k + 1) for j in range(2 * k + 1)])


@pytest.mark.parametrize("k", [1, 2, 8, 32])
def test_round_gram_is_diagonal_with_factorial_entries(grid, k):
    G = hilb(ROUND, k, grid).G
    assert np.allclose(G.diagonal().real / gram_diagonal(k), 1, rtol=0, atol=1e-12)
    off = G - np.diag(G.diagonal())
    assert np.max(np.abs(off)) < 1e-12 * np.max(np.abs(G))


@pytest.mark.parametrize("k", [1, 4, 16, 32])
def test_round_bergman_function_is_constant(grid, k):
    assert np.allclose(bergman_rho(ROUND, k, grid), (2 * k + 1) / 2, rtol=0, atol=1e-10)


def test_bergman_trace_identity(grid, bumped):
    for k in (3, 8):
        rho = bergman_rho(bumped, k, grid)
        assert grid.integrate(rho * ma_measure(bumped, grid)) == pytest.approx(2 * k + 1, rel=1e-12)


def test_fs_of_hilb_is_a_constant_shift_at_round(grid):
    for k in (1, 5, 20):
        u = FSPotential(hilb(ROUND, k, grid)).relative_values(grid)
        assert np.allclose(u, math.log((2 * k + 1) / (2 * k)) / k, atol=1e-13)


def test_hilb_reversal_symmetry(grid):
    G = hilb(ROUND, 1, grid).G
    P = np.eye(3)[::-1]
    assert np.allclose(P @ G @ P, G, atol=1e-14)


def test_orthonormal_frame(grid, bumped):
    frame = HilbertFrame(bumped, 5, grid)
    assert np.allclose(frame.operator(np.ones(grid.size)), np.eye(frame.N), atol=1e-12)


def test_toeplitz_of_constant_reproduces(grid, bumped):
    frame = HilbertFrame(bumped, 4, grid)
    rng = np.random.default_rng(3)
    c = rng.normal(size=frame.N) + 1j * rng.normal(size=frame.N)
    assert np.allclose(toeplitz_project(2.0, bumped, 4, grid, c, frame), 2 * c, atol=1e-12)


def test_toeplitz_is_hermitian_and_positive_for_positive_symbol(grid, bumped):
    T = toeplitz("1 + x3^2", bumped, 4, grid)
    assert np.allclose(T, T.conj().T)
    assert np.linalg.eigvalsh(T).min() > 0


def test_q_matrix_of_height_is_exact(grid):
    # K_{x,k} = (k - 1/2 + 1/(2(k+1))) x and H(Q_x) = k x at the round metric
    k = 6
    frame = HilbertFrame(ROUND, k, grid)
    Q = q_matrix("x3", ROUND, k, grid, frame)
    U = frame.Z / np.linalg.norm(frame.Z, axis=1)[:, None]
    HQ = np.einsum("pa,ab,pb->p", U.conj(), Q, U).real
    assert np.allclose(HQ, k * grid.x, atol=1e-11)
    Kf, _ = kernel_diagonals("x3", "x3", ROUND, k, grid, frame)
    assert np.allclose(Kf.real, (k - 0.5 + 0.5 / (k + 1)) * grid.x, atol=1e-11)


def test_q_matrix_of_one_is_scaled_identity(grid, bumped):
    Q = q_matrix("1", bumped, 3, grid)
    assert np.allclose(Q, 3 * np.eye(7), atol=1e-12)


def test_no_overflow_at_largest_k(grid, bumped):
    form = hilb(bumped, 32, grid)
    assert np.all(np.isfinite(form.G))
    form.cholesky()
    assert np.all(np.isfinite(FSPotential(form).relative_values(grid)))


def test_fs_matches_sup_characterization(small_grid):
    rng = np.random.default_rng(7)
    k = 2
    X = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    form = HermitianForm(X @ X.conj().T + np.eye(5), k)
    sampled, optimal = fs_sup_oracle(form, small_grid, n_samples=2000, rng=rng)
    u = FSPotential(form).relative_values(small_grid)
    assert np.allclose(optimal, u, atol=1e-12)
    assert np.all(sampled <= u + 1e-12)


def test_indefinite_and_singular_forms_raise():
    with pytest.raises(IndefiniteFormError):
        HermitianForm(np.diag([1.0, -1.0, 1.0]), 1).cholesky()
    v = np.array([1.0, 2.0, 3.0])
    with pytest.raises(IndefiniteFormError):
        HermitianForm(np.outer(v, v), 1).cholesky()


def test_shape_mismatch():
    with pytest.raises(ValueError):
        HermitianForm(np.eye(4), 1)


def test_json_round_trip(grid, bumped):
    form = hilb(bumped, 3, grid)
    back = HermitianForm.from_json(form.to_json())
    assert back.k == 3
    assert np.array_equal(back.G, form.G)


def test_transformed_matches_matrix_exponential(grid, bumped):
    from scipy.linalg import expm

    form = hilb(bumped, 2, grid)
    rng = np.random.default_rng(0)
    X = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    A = (X + X.conj().T) / 2
    L = form.cholesky()
    for t in (-0.4, 0.3, 1.0):
        moved = form.transformed(A, t)
        assert np.allclose(moved.G, L @ expm(-t * A) @ L.conj().T, atol=1e-12)
        assert moved.logdet() == pytest.approx(form.logdet() - t * np.trace(A).real, abs=1e-10)
