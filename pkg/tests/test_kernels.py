"""Compiled and pure backends must agree; kernel-level physics fixtures."""
import numpy as np
import pytest

from sns_chain import kernels
from sns_chain.chain import ChainParams, build_struct_matrices, hamiltonian
from sns_chain.commutator import _padded
from sns_chain.lyapunov import expm
from sns_chain.montecarlo import step_matrices

BACKENDS = kernels.backends()
needs_both = pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled extension not built")


def _coef(w2=1.0, kappa=0.0, gamma=1.0, lam=0.3, dt=0.005, kT1=1.5, kTN=0.5, semi=1.0):
    return (w2, 2.0 + kappa, gamma, lam, dt, np.sqrt(2 * gamma * kT1 * dt), np.sqrt(2 * gamma * kTN * dt), semi)


def _state(rng, B, n):
    return rng.normal(size=(B, n)), rng.normal(size=(B, n))


def test_backend_selected():
    assert kernels.BACKEND in BACKENDS
    assert "pure" in BACKENDS


@needs_both
@pytest.mark.parametrize("semi", [1.0, 0.0])
def test_advance_agrees(rng, semi):
    B, n, steps = 3, 5, 300
    q0, p0 = _state(rng, B, n)
    noise = rng.normal(size=(B, steps, 2))
    out = {}
    for name, mod in BACKENDS.items():
        q, p = q0.copy(), p0.copy()
        rec = np.zeros((B, steps // 7, 2 * n))
        assert mod.em_advance(q, p, _coef(semi=semi), noise, rec, 7, 1e6) is None
        out[name] = (q, p, rec)
    for a, b in zip(out["pure"], out["compiled"]):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)


@needs_both
def test_accumulate_agrees(rng):
    B, n, steps = 2, 4, 400
    q0, p0 = _state(rng, B, n)
    noise = rng.normal(size=(B, steps, 2))
    out = {}
    for name, mod in BACKENDS.items():
        q, p = q0.copy(), p0.copy()
        a1, a2 = np.zeros((B, 8, 2 * n)), np.zeros((B, 8, 2 * n, 2 * n))
        # start mid-run to exercise the burn-in offset
        assert mod.em_accumulate(q, p, _coef(), noise, 30, 80, 40, a1, a2, 1e6) is None
        out[name] = (q, a1, a2)
    for a, b in zip(out["pure"], out["compiled"]):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-11)


@needs_both
@pytest.mark.parametrize("semi", [1.0, 0.0])
def test_flow_agrees(rng, semi):
    B, n, steps = 2, 3, 200
    q0, p0 = _state(rng, B, n)
    noise = rng.normal(size=(B, steps, 2))
    out = {}
    for name, mod in BACKENDS.items():
        q, p = q0.copy(), p0.copy()
        U = np.ascontiguousarray(np.broadcast_to(np.eye(2 * n), (B, 2 * n, 2 * n)))
        ur, xr = np.zeros((B, steps // 5, 2 * n, 2 * n)), np.zeros((B, steps // 5, 2 * n))
        assert mod.em_flow(q, p, U, _coef(semi=semi), noise, ur, xr, 5, 1e6) is None
        out[name] = (ur, xr)
    for a, b in zip(out["pure"], out["compiled"]):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)


@needs_both
@pytest.mark.parametrize("N", [2, 5, 8])
def test_commutator_kernels_agree(rng, N):
    U = _padded(rng.normal(size=(N, N)))
    row = rng.normal(size=N)
    c, p = BACKENDS["compiled"], BACKENDS["pure"]
    for name in ("comm_antisym", "comm_c_antisym", "comm_doubly_antisym"):
        np.testing.assert_allclose(getattr(c, name)(U, N), getattr(p, name)(U, N), atol=1e-12)
    np.testing.assert_allclose(c.comm_first_row(U, row, N), p.comm_first_row(U, row, N), atol=1e-12)


@pytest.mark.parametrize("backend", sorted(BACKENDS))
def test_divergence_reported(backend):
    mod = BACKENDS[backend]
    B, n = 3, 2
    q, p = np.zeros((B, n)), np.zeros((B, n))
    q[1, 0] = 50.0  # quartic force explodes with a huge step
    noise = np.zeros((B, 50, 2))
    res = mod.em_advance(q, p, _coef(lam=10.0, dt=0.5), noise, np.zeros((B, 0, 2 * n)), 0, 1e6)
    assert res is not None and res[0] == 1


@pytest.mark.parametrize("backend", sorted(BACKENDS))
def test_energy_conserved_without_bath(backend):
    """gamma = 0 and zero noise: symplectic Euler keeps H within O(dt)."""
    mod = BACKENDS[backend]
    params = ChainParams(N=4, lam=0.5)
    dt, steps = 1e-3, 5000
    q = np.array([[0.8, -0.3, 0.5, 0.1]])
    p = np.array([[0.0, 0.4, -0.2, 0.3]])
    H0 = hamiltonian(params, np.concatenate([q[0], p[0]]))
    rec = np.zeros((1, steps // 50, 8))
    coef = (1.0, 2.0, 0.0, 0.5, dt, 0.0, 0.0, 1.0)
    assert mod.em_advance(q, p, coef, np.zeros((1, steps, 2)), rec, 50, 1e6) is None
    drift = max(abs(hamiltonian(params, x) - H0) for x in rec[0])
    assert drift <= 5 * dt * abs(H0)


@pytest.mark.parametrize("backend", sorted(BACKENDS))
def test_zero_temperature_decays(backend):
    mod = BACKENDS[backend]
    q = np.array([[1.0, -0.5, 0.2]])
    p = np.array([[0.3, 0.0, -0.4]])
    coef = (1.0, 2.0, 1.0, 0.0, 0.01, 0.0, 0.0, 1.0)
    mod.em_advance(q, p, coef, np.zeros((1, 20000, 2)), np.zeros((1, 0, 6)), 0, 1e6)
    assert np.max(np.abs(np.concatenate([q, p], axis=1))) < 1e-3


@pytest.mark.parametrize("backend", sorted(BACKENDS))
def test_flow_linear_is_step_matrix_power(backend):
    """lam = 0: the flow after k steps is A^k from the linear step map."""
    mod = BACKENDS[backend]
    params = ChainParams(N=3, omega=1.2, gamma=0.8, kappa=0.1)
    dt = 0.01
    A, _ = step_matrices(params, dt)
    q, p = np.zeros((1, 3)), np.zeros((1, 3))
    U = np.eye(6)[None].copy()
    ur, xr = np.zeros((1, 1, 6, 6)), np.zeros((1, 1, 6))
    coef = (1.44, 2.1, 0.8, 0.0, dt, 0.1, 0.1, 1.0)
    mod.em_flow(q, p, U, coef, np.ones((1, 100, 2)), ur, xr, 100, 1e6)
    np.testing.assert_allclose(ur[0, 0], np.linalg.matrix_power(A, 100), atol=1e-12)
    b = build_struct_matrices(params).b
    assert np.max(np.abs(ur[0, 0] - expm(b))) <= 10 * dt
