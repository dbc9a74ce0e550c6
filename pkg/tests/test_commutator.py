import numpy as np
import pytest

from sns_chain.chain import ChainParams, tridiag
from sns_chain.commutator import (NoSolutionError, commutator, reconstruct_from_first_row,
                                  solve_commutator_antisym, solve_commutator_c_antisym,
                                  solve_commutator_doubly_antisym)
from sns_chain.harmonic import harmonic_components
from sns_chain.lyapunov import cross_transpose
from sns_chain.perturbation import current_pipeline, solve_first_order_dense, y2_profile

SIZES = [2, 3, 5, 6, 7, 10]


def _R(N):
    R = np.zeros((N, N))
    R[0, 0] = R[-1, -1] = 1.0
    return R


def test_commutator_kappa_independent(rng):
    X = rng.normal(size=(5, 5))
    np.testing.assert_allclose(commutator(X, 0.0), commutator(X, 3.0), atol=1e-13)


@pytest.mark.parametrize("solver", [solve_commutator_antisym, solve_commutator_c_antisym,
                                    solve_commutator_doubly_antisym])
def test_zero_input(solver):
    np.testing.assert_array_equal(solver(np.zeros((6, 6))), 0.0)


def test_first_row_zero():
    np.testing.assert_array_equal(reconstruct_from_first_row(np.zeros((6, 6)), np.zeros(6)), 0.0)


@pytest.mark.parametrize("N", SIZES)
def test_round_trip_antisym(N, rng):
    A = rng.normal(size=(N, N))
    X = A - A.T
    np.testing.assert_allclose(solve_commutator_antisym(commutator(X)), X, atol=1e-12)


@pytest.mark.parametrize("N", SIZES)
def test_round_trip_c_antisym(N, rng):
    A = rng.normal(size=(N, N))
    X = A - cross_transpose(A)
    np.testing.assert_allclose(solve_commutator_c_antisym(commutator(X)), X, atol=1e-12)


@pytest.mark.parametrize("N", SIZES)
def test_round_trip_doubly_antisym(N, rng):
    A = rng.normal(size=(N, N))
    X = A - A.T
    X = X - cross_transpose(X)
    np.testing.assert_allclose(solve_commutator_doubly_antisym(commutator(X)), X, atol=1e-12)


@pytest.mark.parametrize("N", SIZES)
def test_round_trip_first_row(N, rng):
    A = rng.normal(size=(N, N))
    S = A + A.T
    S = S + cross_transpose(S)
    np.testing.assert_allclose(reconstruct_from_first_row(commutator(S), S[0]), S, atol=1e-11)


def test_inconsistent_input_raises(rng):
    with pytest.raises(NoSolutionError, match="residual"):
        solve_commutator_antisym(np.eye(5))
    with pytest.raises(ValueError):
        solve_commutator_antisym(np.ones((3, 4)))
    with pytest.raises(ValueError):
        reconstruct_from_first_row(np.zeros((4, 4)), np.zeros(3))


@pytest.fixture(params=[(6, 1.3, 0.0), (9, 1.3, 0.1), (10, 0.5, 1.0)], ids=lambda t: f"N{t[0]}-nu{t[1]}-k{t[2]}")
def dense(request):
    N, nu, kappa = request.param
    p = ChainParams.dimensionless(N, nu, kappa, T1=1.5, TN=0.5)
    d = solve_first_order_dense(p)
    X0, _, Z0, Gi = harmonic_components(p)
    return p, d, X0, Z0, np.diag(np.diag(Gi)), np.diag(np.diag(X0))


def test_bordered_to_toeplitz(dense):
    p, d, *_ = dense
    N = p.N
    Y1 = d.blocks(1).Y
    R = _R(N)
    Z = solve_commutator_antisym(-(R @ Y1 + Y1 @ R) / p.nu)
    row = np.concatenate([[0.0], -Y1[0, :N - 1] / p.nu])
    i, j = np.indices((N, N))
    toe = np.sign(j - i) * row[np.abs(j - i)]
    np.testing.assert_allclose(Z, toe, atol=1e-10)


def test_z1_from_commutator(dense):
    p, d, X0, Z0, V0, _ = dense
    Y1 = d.blocks(1).Y
    R = _R(p.N)
    Z1 = solve_commutator_antisym(-(R @ Y1 + Y1 @ R) / p.nu + Z0 @ V0 - V0 @ Z0)
    np.testing.assert_allclose(Z1, d.blocks(1).Z, atol=1e-10)


def test_c_antisym_first_row_is_varphi(dense):
    p, d, *_ = dense
    N = p.N
    Y1 = d.blocks(1).Y
    R = _R(N)
    Z = solve_commutator_antisym(-(R @ Y1 + Y1 @ R) / p.nu)
    X = solve_commutator_c_antisym(R @ Z + Z @ R)
    np.testing.assert_allclose(X[0, :N - 1], current_pipeline(p).varphi, atol=1e-9)
    assert abs(X[0, -1]) <= 1e-12


def test_z2_and_zeta(dense):
    p, d, X0, Z0, _, V1 = dense
    Y2, Z2 = d.blocks(2).Y, d.blocks(2).Z
    R = _R(p.N)
    Z2s = solve_commutator_doubly_antisym(-(R @ Y2 + Y2 @ R) / p.nu + Z0 @ V1 - V1 @ Z0)
    np.testing.assert_allclose(Z2s, Z2, atol=1e-10)
    np.testing.assert_allclose(y2_profile(p).zeta, Z2[0], atol=1e-9)


def test_y2_reconstruction(dense):
    p, d, X0, Z0, _, V1 = dense
    Y2, Z2 = d.blocks(2).Y, d.blocks(2).Z
    G = tridiag(p.N, 2.0 + p.kappa)
    R = _R(p.N)
    U = G @ Z2 @ R + R @ Z2 @ G + G @ X0 @ V1 - V1 @ X0 @ G
    np.testing.assert_allclose(reconstruct_from_first_row(U, Y2[0]), Y2, atol=1e-10)


def test_y2_diagonal_from_structured_first_row():
    p = ChainParams.dimensionless(10, 1.0, 0.0, T1=2.0, TN=1.0)
    d = solve_first_order_dense(p)
    X0, _, Z0, _ = harmonic_components(p)
    V1 = np.diag(np.diag(X0))
    y2 = y2_profile(p)
    N = p.N
    Z2 = solve_commutator_doubly_antisym(
        -(_R(N) @ d.blocks(2).Y + d.blocks(2).Y @ _R(N)) / p.nu + Z0 @ V1 - V1 @ Z0)
    first = np.zeros(N)
    first[2::2] = y2.psi_odd
    first[1::2] = d.blocks(2).Y[0, 1::2]  # even labels come from the dense solve
    G = tridiag(N, 2.0)
    U = G @ Z2 @ _R(N) + _R(N) @ Z2 @ G + G @ X0 @ V1 - V1 @ X0 @ G
    Y2 = reconstruct_from_first_row(U, first)
    np.testing.assert_allclose(np.diag(Y2), np.diag(d.blocks(2).Y), atol=1e-9)
