"""Property-based checks of the structural invariants."""
import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from sns_chain.chain import ChainParams, build_struct_matrices, check_drift_stability, drift_field
from sns_chain.commutator import (commutator, reconstruct_from_first_row, solve_commutator_antisym,
                                  solve_commutator_c_antisym, solve_commutator_doubly_antisym)
from sns_chain.harmonic import assemble_phi0, heat_current, phi_tridiagonal, phi_vector
from sns_chain.lyapunov import SymmetryTag, classify_symmetry, cross_transpose, lyapunov_residual
from sns_chain.perturbation import build_inhomogeneity, current_pipeline, solve_first_order_dense, y2_profile

SETTINGS = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])

positive = st.floats(0.2, 3.0)
params_st = st.builds(
    ChainParams,
    N=st.integers(2, 14),
    omega=positive,
    gamma=positive,
    kappa=st.floats(0.0, 2.0),
    T1=st.floats(0.1, 5.0),
    TN=st.floats(0.1, 5.0),
    kB=st.floats(0.5, 2.0),
)
matrices = st.integers(2, 9).flatmap(
    lambda n: st.lists(st.floats(-3, 3), min_size=n * n, max_size=n * n).map(lambda v: np.array(v).reshape(n, n)))


@SETTINGS
@given(params_st)
def test_drift_always_stable(p):
    ok, absc = check_drift_stability(build_struct_matrices(p))
    assert ok and absc < 0


@SETTINGS
@given(params_st)
def test_harmonic_solution_exact(p):
    m = build_struct_matrices(p)
    cov = assemble_phi0(p)
    assert lyapunov_residual(m.b, cov.assembled, -m.D) <= 1e-10 * np.max(np.abs(m.D)) * max(1.0, p.omega**2)
    assert np.ptp(heat_current(cov)) <= 1e-12 * max(1.0, np.max(np.abs(cov.Z)))


@SETTINGS
@given(params_st)
def test_swapping_baths_reflects_solution(p):
    """Exchanging the bath temperatures is the site reflection i -> N+1-i."""
    a = assemble_phi0(p).assembled
    b = assemble_phi0(p.replace(T1=p.TN, TN=p.T1)).assembled
    rev = np.eye(p.N)[::-1]
    P = np.block([[rev, np.zeros_like(rev)], [np.zeros_like(rev), rev]])
    np.testing.assert_allclose(b, P @ a @ P, atol=1e-10 * np.max(np.abs(a)))


@SETTINGS
@given(st.integers(2, 300), st.floats(0.01, 5.0), st.floats(0.0, 3.0))
def test_phi_closed_form(N, nu, kappa):
    p = ChainParams.dimensionless(N, nu, kappa)
    np.testing.assert_allclose(phi_vector(p).base, phi_tridiagonal(p), atol=1e-10)


@SETTINGS
@given(matrices, matrices)
def test_cross_transpose_involution_and_products(A, B):
    np.testing.assert_array_equal(cross_transpose(cross_transpose(A)), A)
    if A.shape == B.shape:
        np.testing.assert_allclose(cross_transpose(A @ B), cross_transpose(B) @ cross_transpose(A), atol=1e-10)


@SETTINGS
@given(matrices)
def test_commutator_round_trips(A):
    scale = max(1.0, np.max(np.abs(A)))
    X = A - A.T
    np.testing.assert_allclose(solve_commutator_antisym(commutator(X)), X, atol=1e-11 * scale)
    Xc = A - cross_transpose(A)
    np.testing.assert_allclose(solve_commutator_c_antisym(commutator(Xc)), Xc, atol=1e-11 * scale)
    Xd = X - cross_transpose(X)
    np.testing.assert_allclose(solve_commutator_doubly_antisym(commutator(Xd)), Xd, atol=1e-11 * scale)
    S = A + A.T
    S = S + cross_transpose(S)
    np.testing.assert_allclose(reconstruct_from_first_row(commutator(S), S[0]), S, atol=1e-10 * scale)


@SETTINGS
@given(params_st, st.floats(0.0, 2.0), st.integers(0, 2**32 - 1))
def test_drift_linear_in_state_when_harmonic(p, scale, seed):
    x = np.random.default_rng(seed).normal(size=2 * p.N)
    np.testing.assert_allclose(drift_field(p, scale * x), scale * drift_field(p, x), atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 12), st.floats(0.3, 3.0), st.floats(0.0, 1.5))
def test_first_order_invariants(N, nu, kappa):
    p = ChainParams.dimensionless(N, nu, kappa, T1=1.7, TN=0.6)
    d = solve_first_order_dense(p)
    assert max(d.residuals()) <= 1e-9
    H = build_inhomogeneity(p)
    assert SymmetryTag.CT_ANTISYMMETRIC in classify_symmetry(H[1], 1e-12, include_ct=True)
    b2 = d.blocks(2)
    assert np.max(np.abs(np.diag(b2.Z, 1))) <= 1e-10
    assert abs(b2.Y[0, 0]) <= 1e-10
    assert abs(current_pipeline(p).varphi1 - d.blocks(1).Z[0, 1]) <= 1e-8
    np.testing.assert_allclose(y2_profile(p).diag, np.diag(b2.Y), atol=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 30), st.floats(0.3, 3.0), st.floats(0.0, 1.5))
def test_y2_profile_c_symmetric(N, nu, kappa):
    y = y2_profile(ChainParams.dimensionless(N, nu, kappa)).diag
    assert y[0] == 0.0
    np.testing.assert_array_equal(y, y[::-1])
