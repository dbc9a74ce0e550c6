"""First-order correction in the quartic pinning strength ``lam``.

The correction ``Phi1 = dPhi/dlam`` at ``lam = 0`` splits as
``Phi1 = 3 k^2 T^2 / omega^4 (Phi1_0 + eta Phi1_1 + eta^2 Phi1_2)``, where each
dimensionless ``Phi1_l`` solves ``b Phi1_l + Phi1_l b^T = H_l``. Blocks are
reported in the scaled form ``X_l = omega^2 (Phi1_l)_qq``,
``Z_l = gamma (Phi1_l)_qp``, ``Y_l = (Phi1_l)_pp``, which depend on
``N, nu, kappa`` only.

Two independent routes are provided: dense Lyapunov solves (the reference)
and the structured closed-form pipelines for the current and for the
diagonal of ``Y_1`` and ``Y_2``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import ChainParams, build_struct_matrices, derive_scalars, tridiag
from .harmonic import (CovarianceBlocks, ExtendedPhi, assemble_phi0, g_vector,
                       harmonic_components, log_sinh, phi_vector, sinh_ratio)
from .lyapunov import lyapunov_residual, solve_lyapunov

__all__ = [
    "PerturbationDecomposition",
    "CurrentPipeline",
    "Y1Profile",
    "Y2Profile",
    "ProfilePipeline",
    "build_inhomogeneity",
    "first_order_rhs",
    "solve_first_order_dense",
    "current_pipeline",
    "current_uniformity_check",
    "y1_structured",
    "y1_profile",
    "y2_profile",
    "profile_pipeline",
    "temperature_correction",
]


def _prefactor(params: ChainParams) -> float:
    kT = params.kB * derive_scalars(params).T
    return 3.0 * kT**2 / params.omega**4


def build_inhomogeneity(params: ChainParams):
    """Dimensionless right-hand sides ``(H0, H1, H2)``, each of order 2N.

    ``3 (N Phi0 + Phi0 N^T) = prefactor (H0 + eta H1 + eta^2 H2)`` where ``N``
    is the Gaussian linearization of the cubic force around ``Phi0``.
    """
    X0, _, Z0, Ginv = harmonic_components(params)
    n = params.N
    V0 = np.diag(np.diag(Ginv))
    V1 = np.diag(np.diag(X0))
    O = np.zeros((n, n))
    gn = params.gamma * params.nu
    H0 = np.block([[O, Ginv @ V0], [V0 @ Ginv, O]])
    H1 = np.block([[O, X0 @ V0 + Ginv @ V1],
                   [V1 @ Ginv + V0 @ X0, gn * (V0 @ Z0 - Z0 @ V0)]])
    H2 = np.block([[O, X0 @ V1],
                   [V1 @ X0, gn * (V1 @ Z0 - Z0 @ V1)]])
    return H0, H1, H2


def first_order_rhs(params: ChainParams, phi0: CovarianceBlocks | None = None) -> np.ndarray:
    """Physical right-hand side ``3 (N Phi0 + Phi0 N^T)``.

    ``N = [[0, 0], [diag(Phi0_qq), 0]]`` comes from replacing ``q_i^3`` by
    ``3 <q_i^2> q_i`` in the force. Built directly from ``Phi0`` so it can be
    checked against :func:`build_inhomogeneity`.
    """
    phi0 = assemble_phi0(params) if phi0 is None else phi0
    n = params.N
    full = phi0.assembled
    Nmat = np.zeros((2 * n, 2 * n))
    Nmat[n:, :n] = np.diag(np.diag(phi0.X))
    return 3.0 * (Nmat @ full + full @ Nmat.T)


@dataclass(frozen=True)
class PerturbationDecomposition:
    """Dense first-order solution.

    Attributes
    ----------
    Phi1_0, Phi1_1, Phi1_2 : ndarray
        Dimensionless solutions of ``b Phi1_l + Phi1_l b^T = H_l``.
    H : tuple of ndarray
        The right-hand sides ``H_l``.
    prefactor : float
        ``3 k^2 T^2 / omega^4``.
    """

    params: ChainParams
    Phi1_0: np.ndarray
    Phi1_1: np.ndarray
    Phi1_2: np.ndarray
    H: tuple
    prefactor: float

    def component(self, l: int) -> np.ndarray:
        return (self.Phi1_0, self.Phi1_1, self.Phi1_2)[l]

    def blocks(self, l: int) -> CovarianceBlocks:
        """Scaled blocks ``(X_l, Z_l, Y_l)``."""
        P = self.component(l)
        n = self.params.N
        p = self.params
        return CovarianceBlocks(X=p.omega**2 * P[:n, :n], Z=p.gamma * P[:n, n:], Y=P[n:, n:].copy())

    @property
    def eta(self) -> float:
        return derive_scalars(self.params).eta

    @property
    def Phi1(self) -> np.ndarray:
        """Physical first-order correction of order 2N."""
        e = self.eta
        return self.prefactor * (self.Phi1_0 + e * self.Phi1_1 + e * e * self.Phi1_2)

    def residuals(self) -> tuple:
        """Relative residuals ``max|b Phi1_l + Phi1_l b^T - H_l| / max|H_l|``."""
        b = build_struct_matrices(self.params).b
        out = []
        for l in range(3):
            H = self.H[l]
            scale = max(np.max(np.abs(H)), np.finfo(float).tiny)
            out.append(lyapunov_residual(b, self.component(l), H) / scale)
        return tuple(out)


def solve_first_order_dense(params: ChainParams) -> PerturbationDecomposition:
    b = build_struct_matrices(params).b
    H = build_inhomogeneity(params)
    sols = [solve_lyapunov(b, Hl) for Hl in H]
    return PerturbationDecomposition(params, *sols, H=H, prefactor=_prefactor(params))


# --------------------------------------------------------------------- current


@dataclass(frozen=True)
class CurrentPipeline:
    ztilde: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    w: np.ndarray
    varphi: np.ndarray
    current_correction: float

    @property
    def varphi1(self) -> float:
        return float(self.varphi[0])


def _ztilde(phi: ExtendedPhi, g: np.ndarray) -> np.ndarray:
    N = phi.N
    out = np.zeros(N - 1)
    for j in range(1, N):
        l = np.arange(1, j + 1)
        out[j - 1] = 0.5 * np.sum((g[j - l] - g[l - 1]) * phi[j + 1 - 2 * l])
    return out


def current_pipeline(params: ChainParams) -> CurrentPipeline:
    """Structured route to ``varphi`` and the first-order current correction."""
    N, nu, kappa = params.N, params.nu, params.kappa
    phi = phi_vector(params)
    g = g_vector(params)
    zt = _ztilde(phi, g)
    w1 = tridiag(N - 1, 2.0 + kappa) @ zt
    w2 = np.zeros(N - 1)
    for j in range(1, N):
        l = np.arange(1, N - j + 1)
        w2[j - 1] = g[j] * phi[j] + 0.5 * nu * np.sum((g[l - 1] - g[j + l - 1]) * phi[j - 1 + 2 * l])
    w = w1 + w2
    varphi = -np.linalg.solve(tridiag(N - 1, 2.0 + nu + kappa), w)
    T = derive_scalars(params).T
    corr = 3.0 * params.kB**2 * T * (params.T1 - params.TN) / (2.0 * params.gamma * params.omega**4) * varphi[0]
    return CurrentPipeline(zt, w1, w2, w, varphi, float(corr))


def current_uniformity_check(decomp: PerturbationDecomposition, tol: float = 1e-10) -> dict:
    """Spread of ``(Z_1)_{i,i+1}`` and size of ``(Z_2)_{i,i+1}`` (dimensionless)."""
    z1 = np.diag(decomp.blocks(1).Z, 1)
    z2 = np.diag(decomp.blocks(2).Z, 1)
    spread = float(z1.max() - z1.min())
    z2max = float(np.max(np.abs(z2)))
    return {"z1_spread": spread, "z2_max": z2max, "varphi1": float(z1.mean()),
            "passed": bool(spread <= tol and z2max <= tol)}


# --------------------------------------------------------------------- Y1


@dataclass(frozen=True)
class Y1Profile:
    exact: np.ndarray
    closed: np.ndarray
    linear: np.ndarray | None
    rho0: float
    rho1: float


def _rho(params: ChainParams, phi: ExtendedPhi) -> tuple[float, float]:
    """Finite-N ``rho_sigma = sum_k sinh((2k-sigma) ab)/sinh(ab) phi_{2k-sigma}``."""
    ab = derive_scalars(params).alpha_bar
    out = []
    for sigma in (0, 1):
        m = 2 * np.arange(1, params.N // 2 + 1) - sigma
        m = m[m < params.N]  # phi_N = 0
        f = phi[m]
        if ab == 0.0:
            weights = m.astype(float)
        else:
            weights = np.exp(log_sinh(m * ab) - log_sinh(ab))
        out.append(float(np.sum(weights * f)))
    return out[0], out[1]


def y1_structured(params: ChainParams, pipe: CurrentPipeline | None = None) -> np.ndarray:
    """Exact ``(Y_1)_ii`` from the current pipeline, no dense solve.

    For ``i <= [N/2]``::

        (Y_1)_ii = (G_kappa^{(N-1)} Zt_1)_{2i-1} + g_{2i} phi_{2i-1}
                   + nu/2 sum_{l=i}^{N-i} phi_{2l} sum_{k=0}^{i-1} (g_{l-k} - g_{l+k+1})

    with ``Zt_1 = varphi + ztilde``; the rest follows from c-antisymmetry.
    """
    N, nu = params.N, params.nu
    pipe = current_pipeline(params) if pipe is None else pipe
    phi = phi_vector(params)
    g = np.concatenate([[0.0], g_vector(params)])  # 1-based
    lead = tridiag(N - 1, 2.0 + params.kappa) @ (pipe.varphi + pipe.ztilde)
    y = np.zeros(N)
    for i in range(1, N // 2 + 1):
        l = np.arange(i, N - i + 1)[:, None]
        k = np.arange(i)[None, :]
        inner = np.sum(g[l - k] - g[l + k + 1], axis=1)
        y[i - 1] = lead[2 * i - 2] + g[2 * i] * phi[2 * i - 1] + 0.5 * nu * np.sum(phi[2 * l[:, 0]] * inner)
    y[N - 1 - np.arange(N // 2)] = -y[: N // 2]
    return y


def y1_profile(params: ChainParams, decomp: PerturbationDecomposition | None = None) -> Y1Profile:
    """Dense ``(Y_1)_ii`` with its leading-order closed form.

    ``closed_i = -nu (2+kappa)(rho1-rho0)/(4+nu+2kappa) sinh((N+1-2i) ab)/sinh((N+1) ab)``;
    for ``kappa = 0`` also ``linear_i = 2 nu/(4+nu)^2 (2i/(N+1) - 1)``.
    """
    N, nu, kappa = params.N, params.nu, params.kappa
    decomp = solve_first_order_dense(params) if decomp is None else decomp
    exact = np.diag(decomp.blocks(1).Y).copy()
    rho0, rho1 = _rho(params, phi_vector(params))
    i = np.arange(1, N + 1)
    amp = -nu * (2.0 + kappa) * (rho1 - rho0) / (4.0 + nu + 2.0 * kappa)
    closed = amp * sinh_ratio(N + 1 - 2 * i, N + 1, derive_scalars(params).alpha_bar)
    linear = 2.0 * nu / (4.0 + nu) ** 2 * (2.0 * i / (N + 1) - 1.0) if kappa == 0.0 else None
    return Y1Profile(exact, closed, linear, rho0, rho1)


# --------------------------------------------------------------------- Y2


@dataclass(frozen=True)
class Y2Profile:
    diag: np.ndarray
    psi_odd: np.ndarray
    zeta: np.ndarray
    delta: np.ndarray
    h1: float
    h2: float
    h: float
    h1_asymptotic: float
    h2_asymptotic: float
    h_asymptotic: float


def _psi_odd(phi: ExtendedPhi, nu: float) -> np.ndarray:
    """``psi_{2k+1}`` for ``k = 1..[(N-1)/2]`` (index 0 holds k=1)."""
    N = phi.N
    K = (N - 1) // 2
    out = np.zeros(K)
    for k in range(1, K + 1):
        n = np.arange(1, k + 1)[:, None]
        l = np.arange(k, N - k)[None, :]
        inner = np.sum(phi[2 * (l + n) + 1] - phi[2 * (l - n) + 1], axis=1)
        out[k - 1] = 0.5 * nu * np.sum(phi[2 * n[:, 0]] * inner)
    return out


def _zeta(phi: ExtendedPhi) -> np.ndarray:
    """First row of ``Z_2``, 1-based with zero padding: entries ``0..N+1``."""
    N = phi.N
    out = np.zeros(N + 2)
    for j in range(2, N):
        n = np.arange(1, j)[:, None]
        l = np.arange(1, N - j + 1)[None, :]
        inner = np.sum(phi[2 * (l + n) - 1] - phi[2 * (j + l - n) - 1], axis=1)
        out[j] = 0.25 * np.sum(phi[j - 2 * n[:, 0]] * inner)
    return out


def _h_asymptotic(nu: float, kappa: float) -> tuple[float, float, float]:
    c = 1.0 + 0.5 * (nu + kappa)
    a = np.arccosh(c)
    s2 = np.sinh(a) ** 2
    s3 = np.sinh(3.0 * a)
    h1 = c * (c - 1.0 - 0.5 * kappa) / (2.0 * np.exp(a) * s2 * s3)
    h2 = -(1.0 / c + c / (np.exp(a) * s3)) / (4.0 * s2)
    h = -2.0 * nu / ((nu + kappa) * (2.0 + nu + kappa) * (4.0 + nu + kappa))
    return float(h1), float(h2), float(h)


def y2_profile(params: ChainParams) -> Y2Profile:
    """Structured ``(Y_2)_ii`` via partial sums of ``Delta_k`` and the plateau ``h``."""
    N, nu, kappa = params.N, params.nu, params.kappa
    phi = phi_vector(params)
    K = (N - 1) // 2
    psi = _psi_odd(phi, nu)
    zeta = _zeta(phi)
    k = np.arange(1, K + 1)
    Gz = (2.0 + kappa) * zeta[2 * k] - zeta[2 * k - 1] - zeta[2 * k + 1]
    bulk = np.array([np.sum(phi[2 * (kk - np.arange(1, kk + 1)) + 1] - phi[2 * (kk + np.arange(1, kk + 1)) - 1])
                     for kk in k])
    edge = phi[4 * k - 1] * phi[2 * k - 1] if K else np.zeros(0)
    delta = psi - Gz - (edge + nu * phi[2 * k] * bulk) if K else np.zeros(0)

    diag = np.zeros(N)
    half = (N + 1) // 2
    partial = np.concatenate([[0.0], np.cumsum(delta)])
    diag[:half] = partial[:half]
    diag[N - half:] = diag[:half][::-1]
    h1 = float(np.sum(2.0 * zeta[2 * k + 1] - (2.0 + kappa) * zeta[2 * k] - edge))
    h2 = float(np.sum(psi / nu - phi[2 * k] * bulk))
    h1a, h2a, ha = _h_asymptotic(nu, kappa)
    return Y2Profile(diag, psi, zeta[1:N + 1].copy(), delta, h1, h2, h1 + nu * h2, h1a, h2a, ha)


@dataclass(frozen=True)
class ProfilePipeline:
    y1_diag: np.ndarray
    y2_diag: np.ndarray
    rho0: float
    rho1: float
    h1: float
    h2: float
    h: float
    h_asymptotic: float


def profile_pipeline(params: ChainParams) -> ProfilePipeline:
    """Structured diagonals of ``Y_1`` and ``Y_2`` and their constants."""
    y1 = y1_structured(params)
    y2 = y2_profile(params)
    rho0, rho1 = _rho(params, phi_vector(params))
    return ProfilePipeline(y1, y2.diag, rho0, rho1, y2.h1, y2.h2, y2.h, y2.h_asymptotic)


def temperature_correction(params: ChainParams, decomp: PerturbationDecomposition | None = None) -> np.ndarray:
    """Diagonal of the physical ``Phi1_pp``: ``prefactor (eta Y_1 + eta^2 Y_2)_ii``."""
    decomp = solve_first_order_dense(params) if decomp is None else decomp
    e = decomp.eta
    y1 = np.diag(decomp.blocks(1).Y)
    y2 = np.diag(decomp.blocks(2).Y)
    return decomp.prefactor * (e * y1 + e * e * y2)
