import numpy as np
import pytest

from sns_chain.chain import ChainParams, build_struct_matrices, derive_scalars, tridiag
from sns_chain.harmonic import (ExtendedPhi, assemble_phi0, g_vector, green_kappa, harmonic_components,
                                heat_current, log_sinh, phi_tridiagonal, phi_vector, sinh_ratio,
                                temperature_profile)
from sns_chain.lyapunov import SymmetryTag, classify_symmetry, lyapunov_residual, solve_lyapunov


def test_log_sinh_large_argument():
    assert log_sinh(800.0) == pytest.approx(800.0 - np.log(2.0), rel=1e-15)
    assert log_sinh(0.5) == pytest.approx(np.log(np.sinh(0.5)), rel=1e-14)


def test_sinh_ratio_edge_cases():
    assert sinh_ratio(3, 6, 0.0) == 0.5
    assert sinh_ratio(0, 6, 1.0) == 0.0
    assert sinh_ratio(-2, 5, 0.3) == pytest.approx(-np.sinh(0.6) / np.sinh(1.5))
    assert np.isfinite(sinh_ratio(990, 1000, 2.0))


def test_phi_small_cases():
    np.testing.assert_allclose(phi_vector(ChainParams(N=2)).base, [1 / 3], atol=1e-15)
    np.testing.assert_allclose(phi_vector(ChainParams(N=3)).base, [3 / 8, 1 / 8], atol=1e-15)


def test_phi_asymptotic():
    p = ChainParams(N=60)
    phi = phi_vector(p)
    a = derive_scalars(p).alpha
    j = np.arange(1, 8)
    np.testing.assert_allclose(phi[j], np.exp(-a * j), rtol=1e-12)


@pytest.mark.parametrize("N", [2, 5, 40, 200, 600])
@pytest.mark.parametrize("nu,kappa", [(0.5, 0.0), (1.0, 0.1), (2.0, 1.0)])
def test_phi_matches_banded_solve(N, nu, kappa):
    p = ChainParams.dimensionless(N, nu, kappa)
    np.testing.assert_allclose(phi_vector(p).base, phi_tridiagonal(p), rtol=0, atol=1e-10)


def test_extended_phi_sign_rules():
    phi = phi_vector(ChainParams(N=5, omega=1.2))
    for k in range(0, 6):
        assert phi[-k] == -phi[k]
        assert phi[5 + k] == -phi[5 - k]
    assert phi[0] == 0.0 and phi[5] == 0.0
    with pytest.raises(IndexError):
        phi[11]
    with pytest.raises(IndexError):
        phi[-6]
    assert len(phi) == 4 and isinstance(phi, ExtendedPhi)


def test_g_vector_values():
    np.testing.assert_allclose(g_vector(ChainParams(N=2)), [2 / 3, 2 / 3])
    np.testing.assert_allclose(g_vector(ChainParams(N=3)), [0.75, 1.0, 0.75])


@pytest.mark.parametrize("kappa", [0.0, 0.1, 2.0])
def test_green_is_inverse(kappa):
    N = 9
    p = ChainParams(N=N, kappa=kappa)
    Gi = green_kappa(p)
    np.testing.assert_allclose(Gi @ tridiag(N, 2 + kappa), np.eye(N), atol=1e-12)
    np.testing.assert_allclose(np.diag(Gi), g_vector(p), atol=1e-14)
    np.testing.assert_allclose(g_vector(p), g_vector(p)[::-1], atol=1e-14)


def test_green_large_chain_finite():
    Gi = green_kappa(ChainParams(N=400, kappa=1.0))
    assert np.all(np.isfinite(Gi))


def test_equilibrium_is_gibbs():
    p = ChainParams(N=5, omega=1.3, gamma=0.7, kappa=0.2, T1=1.4, TN=1.4, kB=2.0)
    cov = assemble_phi0(p)
    kT = 2.0 * 1.4
    np.testing.assert_allclose(cov.X, kT / p.omega**2 * np.linalg.inv(tridiag(5, 2.2)), atol=1e-13)
    np.testing.assert_allclose(cov.Y, kT * np.eye(5), atol=1e-14)
    np.testing.assert_array_equal(cov.Z, 0.0)
    np.testing.assert_array_equal(heat_current(cov), 0.0)
    np.testing.assert_allclose(temperature_profile(cov), kT)


def test_n2_fixture(n2):
    cov = assemble_phi0(n2)
    np.testing.assert_allclose(cov.Y, np.diag([11 / 6, 7 / 6]), atol=1e-14)
    np.testing.assert_allclose(cov.X, [[7 / 6, 0.5], [0.5, 5 / 6]], atol=1e-14)
    assert cov.Z[0, 1] == pytest.approx(1 / 6, abs=1e-15)
    np.testing.assert_allclose(temperature_profile(cov), [11 / 6, 7 / 6])
    np.testing.assert_allclose(heat_current(cov), [1 / 6])


def test_x0_anti_diagonal_zero():
    X0 = harmonic_components(ChainParams(N=7, omega=0.8))[0]
    i = np.arange(7)
    np.testing.assert_array_equal(X0[i, 6 - i], 0.0)


def test_component_symmetries():
    X0, Y0, Z0, _ = harmonic_components(ChainParams(N=8, omega=1.1, kappa=0.3))
    assert classify_symmetry(Z0) == {SymmetryTag.ANTISYMMETRIC, SymmetryTag.C_SYMMETRIC}
    assert classify_symmetry(X0) == {SymmetryTag.SYMMETRIC, SymmetryTag.C_ANTISYMMETRIC}
    assert classify_symmetry(Y0) == {SymmetryTag.SYMMETRIC, SymmetryTag.C_ANTISYMMETRIC}


@pytest.mark.parametrize("N", [2, 3, 7, 16])
@pytest.mark.parametrize("nu", [0.5, 2.0])
@pytest.mark.parametrize("kappa", [0.0, 1.0])
def test_closed_form_solves_lyapunov(N, nu, kappa):
    p = ChainParams(N=N, omega=0.7 * np.sqrt(nu), gamma=0.7, kappa=kappa, T1=3.0, TN=0.5, kB=1.3)
    m = build_struct_matrices(p)
    Phi = assemble_phi0(p).assembled
    assert lyapunov_residual(m.b, Phi, -m.D) <= 1e-10 * np.max(np.abs(m.D))
    np.testing.assert_allclose(Phi, solve_lyapunov(m.b, -m.D), rtol=0, atol=1e-9 * np.max(np.abs(Phi)))


def test_current_uniform():
    J = heat_current(assemble_phi0(ChainParams(N=12, omega=1.4, T1=2.0, TN=0.5)))
    assert np.ptp(J) <= 1e-12


def test_bulk_profile_exponentially_flat():
    p = ChainParams(N=60, T1=2.0, TN=1.0)
    T = temperature_profile(assemble_phi0(p))
    a = derive_scalars(p).alpha
    i = np.arange(1, 61)
    bound = np.exp(-2 * a * np.minimum(i, 61 - i))
    mid = slice(20, 40)
    assert np.all(np.abs(T - 1.5)[mid] <= 1.0 * bound[mid])
