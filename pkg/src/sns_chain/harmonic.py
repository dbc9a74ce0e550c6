"""Exact stationary covariance of the harmonic chain (``lam = 0``)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .chain import ChainParams, derive_scalars
from .lyapunov import classify_symmetry

__all__ = [
    "ExtendedPhi",
    "CovarianceBlocks",
    "log_sinh",
    "sinh_ratio",
    "phi_vector",
    "phi_tridiagonal",
    "g_vector",
    "green_kappa",
    "harmonic_components",
    "assemble_phi0",
    "temperature_profile",
    "heat_current",
]


def log_sinh(x):
    """``log(sinh(x))`` for ``x > 0`` without overflow or loss at small ``x``."""
    x = np.asarray(x, dtype=float)
    small = x < 1.0
    with np.errstate(divide="ignore"):
        big = x + np.log1p(-np.exp(-2.0 * np.where(small, 1.0, x))) - np.log(2.0)
        return np.where(small, np.log(np.sinh(np.where(small, x, 1.0))), big)


def sinh_ratio(m, n, x):
    """``sinh(m x) / sinh(n x)`` for ``n > 0``, any real ``m``; ``m / n`` at ``x = 0``."""
    m = np.asarray(m, dtype=float)
    if x == 0.0:
        out = m / n
    else:
        am = np.abs(m)
        safe = np.where(am > 0, am, 1.0)
        out = np.sign(m) * np.where(am > 0, np.exp(log_sinh(safe * x) - log_sinh(n * x)), 0.0)
    return float(out) if out.ndim == 0 else out


class ExtendedPhi:
    """The sequence ``phi_j`` with its sign extension to ``-N <= j <= 2N``.

    ``phi_j = sinh((N-j) alpha) / sinh(N alpha)`` for ``1 <= j <= N-1``,
    ``phi_0 = phi_N = 0``, ``phi_{-k} = -phi_k`` and ``phi_{N+k} = -phi_{N-k}``.
    Indexing with an int or an integer array uses these 1-based labels.
    """

    def __init__(self, base, alpha: float | None = None):
        base = np.asarray(base, dtype=float)
        self.N = base.size + 1
        self.alpha = alpha
        self.base = base
        N = self.N
        table = np.zeros(3 * N + 1)  # labels -N..2N
        table[N + 1: 2 * N] = base
        k = np.arange(1, N)
        table[N - k] = -base[k - 1]
        k = np.arange(0, N + 1)
        inner = np.concatenate([[0.0], base, [0.0]])  # labels 0..N
        table[2 * N + k] = -inner[N - k]
        self._table = table

    def __getitem__(self, j):
        j = np.asarray(j)
        if np.any(j < -self.N) or np.any(j > 2 * self.N):
            raise IndexError(f"phi index outside [-{self.N}, {2 * self.N}]")
        out = self._table[j + self.N]
        return float(out) if out.ndim == 0 else out

    def __len__(self):
        return self.base.size

    def __repr__(self):
        return f"ExtendedPhi(N={self.N}, alpha={self.alpha})"


@dataclass(frozen=True)
class CovarianceBlocks:
    """Covariance ``[[X, Z], [-Z, Y]]`` in physical units."""

    X: np.ndarray
    Z: np.ndarray
    Y: np.ndarray

    @property
    def N(self) -> int:
        return self.X.shape[0]

    @property
    def assembled(self) -> np.ndarray:
        return np.block([[self.X, self.Z], [-self.Z, self.Y]])

    def symmetry(self, tol: float = 1e-12) -> dict:
        return {name: classify_symmetry(getattr(self, name), tol) for name in ("X", "Z", "Y")}


def phi_vector(params: ChainParams) -> ExtendedPhi:
    """Closed-form ``phi_1..phi_{N-1}`` in scaled exponential form."""
    N = params.N
    alpha = derive_scalars(params).alpha
    j = np.arange(1, N)
    return ExtendedPhi(sinh_ratio(N - j, N, alpha), alpha)


def phi_tridiagonal(params: ChainParams) -> np.ndarray:
    """Banded solve of ``G^{(N-1)}_{nu+kappa} phi = e_1`` (oracle for :func:`phi_vector`)."""
    n = params.N - 1
    ab = np.zeros((3, n))
    ab[0, 1:] = -1.0
    ab[1, :] = 2.0 + params.nu + params.kappa
    ab[2, :-1] = -1.0
    rhs = np.zeros(n)
    rhs[0] = 1.0
    return scipy.linalg.solve_banded((1, 1), ab, rhs)


def g_vector(params: ChainParams) -> np.ndarray:
    """Diagonal of the inverse dimensionless coupling matrix."""
    N = params.N
    i = np.arange(1, N + 1, dtype=float)
    ab = derive_scalars(params).alpha_bar
    if ab == 0.0:
        return i * (N + 1 - i) / (N + 1)
    return np.exp(log_sinh(i * ab) + log_sinh((N + 1 - i) * ab) - log_sinh(ab) - log_sinh((N + 1) * ab))


def green_kappa(params: ChainParams) -> np.ndarray:
    """Inverse of the dimensionless tridiagonal coupling matrix, in closed form."""
    N = params.N
    i = np.arange(1, N + 1, dtype=float)
    lo = np.minimum.outer(i, i)
    hi = np.maximum.outer(i, i)
    ab = derive_scalars(params).alpha_bar
    if ab == 0.0:
        return lo * (N + 1 - hi) / (N + 1)
    return np.exp(log_sinh(lo * ab) + log_sinh((N + 1 - hi) * ab) - log_sinh(ab) - log_sinh((N + 1) * ab))


def harmonic_components(params: ChainParams):
    """Dimensionless ``(X0, Y0, Z0, G_kappa^{-1})`` of the harmonic solution."""
    N = params.N
    phi = phi_vector(params)
    i = np.arange(1, N + 1)
    X0 = phi[i[:, None] + i[None, :] - 1]
    Z0 = phi[i[None, :] - i[:, None]]
    Y0 = -params.nu * X0
    Y0[0, 0] += 1.0
    Y0[-1, -1] -= 1.0
    return X0, Y0, Z0, green_kappa(params)


def assemble_phi0(params: ChainParams) -> CovarianceBlocks:
    s = derive_scalars(params)
    X0, Y0, Z0, Ginv = harmonic_components(params)
    kT = params.kB * s.T
    X = kT / params.omega**2 * (Ginv + s.eta * X0)
    Y = kT * (np.eye(params.N) + s.eta * Y0)
    Z = kT / params.gamma * s.eta * Z0
    return CovarianceBlocks(X=X, Z=Z, Y=Y)


def temperature_profile(cov: CovarianceBlocks) -> np.ndarray:
    """Kinetic temperatures ``k T_i = Y_ii``."""
    return np.diag(cov.Y).copy()


def heat_current(cov: CovarianceBlocks) -> np.ndarray:
    """Near-diagonal entries ``Z_{i,i+1}``, i = 1..N-1.

    Reported as the bare covariance entry; a model-dependent constant may
    multiply it to give an energy flux.
    """
    return np.diag(cov.Z, 1).copy()

