"""Oscillator chain between two Langevin baths.

Sites are numbered 1..N in docstrings; arrays are 0-based. Site 1 couples to
the bath at ``T1`` and site N to the bath at ``TN``. Both ends are pinned to
walls at ``q_0 = q_{N+1} = 0`` through the nearest-neighbour spring.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

__all__ = [
    "ChainParams",
    "DerivedScalars",
    "ChainState",
    "StructMatrices",
    "derive_scalars",
    "build_struct_matrices",
    "drift_field",
    "hamiltonian",
    "check_drift_stability",
    "tridiag",
]

_JSON_KEYS = {
    "N": "N",
    "omega": "omega",
    "gamma": "gamma",
    "kappa": "kappa",
    "lambda": "lam",
    "T1": "T1",
    "TN": "TN",
    "kB": "kB",
}


@dataclass(frozen=True)
class ChainParams:
    """Physical parameters of the chain.

    ``lam`` is the quartic on-site strength (``lambda`` in JSON).
    """

    N: int
    omega: float = 1.0
    gamma: float = 1.0
    kappa: float = 0.0
    lam: float = 0.0
    T1: float = 1.0
    TN: float = 1.0
    kB: float = 1.0

    def __post_init__(self):
        if isinstance(self.N, bool) or int(self.N) != self.N:
            raise ValueError(f"N must be an integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        for name in ("omega", "gamma", "kappa", "lam", "T1", "TN", "kB"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if self.N < 2:
            raise ValueError("N must be >= 2: the chain needs two distinct bath sites")
        if self.omega <= 0 or self.gamma <= 0:
            raise ValueError("omega and gamma must be > 0")
        if self.kappa < 0:
            raise ValueError("kappa must be >= 0")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0: a negative quartic term is unbounded below")
        if self.T1 <= 0 or self.TN <= 0 or self.kB <= 0:
            raise ValueError("T1, TN and kB must be > 0")

    @property
    def nu(self) -> float:
        return self.omega**2 / self.gamma**2

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ChainParams":
        unknown = set(data) - set(_JSON_KEYS) - {"sim"}
        if unknown:
            raise ValueError(f"unknown parameter keys: {sorted(unknown)}")
        missing = [k for k in ("N", "omega", "gamma", "kappa", "lambda", "T1", "TN") if k not in data]
        if missing:
            raise ValueError(f"missing parameter keys: {missing}")
        kwargs = {attr: data[key] for key, attr in _JSON_KEYS.items() if key in data}
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {key: getattr(self, attr) for key, attr in _JSON_KEYS.items()}

    def replace(self, **changes) -> "ChainParams":
        return dataclasses.replace(self, **changes)

    @classmethod
    def dimensionless(cls, N: int, nu: float, kappa: float = 0.0, **kw) -> "ChainParams":
        """Parameters with ``gamma = 1`` and ``omega = sqrt(nu)``."""
        return cls(N=N, omega=float(np.sqrt(nu)), gamma=1.0, kappa=kappa, **kw)


@dataclass(frozen=True)
class DerivedScalars:
    T: float
    eta: float
    nu: float
    alpha: float
    alpha_bar: float


@dataclass(frozen=True)
class ChainState:
    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float).copy()
        p = np.asarray(self.p, dtype=float).copy()
        if q.ndim != 1 or q.shape != p.shape:
            raise ValueError("q and p must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise ValueError("state entries must be finite")
        q.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.q, self.p])

    @classmethod
    def from_vector(cls, x) -> "ChainState":
        x = np.asarray(x, dtype=float)
        n = x.size // 2
        return cls(x[:n], x[n:])

    @classmethod
    def origin(cls, N: int) -> "ChainState":
        return cls(np.zeros(N), np.zeros(N))


@dataclass(frozen=True)
class StructMatrices:
    """Structural matrices of the linear part of the dynamics.

    Attributes
    ----------
    G_kappa : (N, N) dimensionless coupling, ``g_kappa / omega**2``.
    R : (N, N) indicator of the two bath sites.
    b : (2N, 2N) drift matrix ``[[0, 1], [-g_kappa, -gamma R]]``.
    D : (2N, 2N) diffusion matrix, nonzero only at ``(p_1, p_1)`` and ``(p_N, p_N)``.
    """

    G_kappa: np.ndarray
    R: np.ndarray
    b: np.ndarray
    D: np.ndarray

    @property
    def N(self) -> int:
        return self.G_kappa.shape[0]


def tridiag(n: int, diag: float, off: float = -1.0) -> np.ndarray:
    """Symmetric Toeplitz tridiagonal matrix of order ``n``."""
    return diag * np.eye(n) + off * (np.eye(n, k=1) + np.eye(n, k=-1))


def derive_scalars(params: ChainParams) -> DerivedScalars:
    T = 0.5 * (params.T1 + params.TN)
    eta = (params.T1 - params.TN) / (2.0 * T)
    nu = params.nu
    # cosh(a) = 1 + x/2  <=>  a = 2 asinh(sqrt(x)/2); no cancellation for small x
    alpha = 2.0 * math.asinh(0.5 * math.sqrt(nu + params.kappa))
    alpha_bar = 2.0 * math.asinh(0.5 * math.sqrt(params.kappa))
    return DerivedScalars(T=T, eta=eta, nu=nu, alpha=alpha, alpha_bar=alpha_bar)


def build_struct_matrices(params: ChainParams) -> StructMatrices:
    N = params.N
    G = tridiag(N, 2.0 + params.kappa)
    R = np.zeros((N, N))
    R[0, 0] = R[-1, -1] = 1.0
    b = np.zeros((2 * N, 2 * N))
    b[:N, N:] = np.eye(N)
    b[N:, :N] = -params.omega**2 * G
    b[N:, N:] = -params.gamma * R
    D = np.zeros((2 * N, 2 * N))
    D[N, N] = 2.0 * params.gamma * params.kB * params.T1
    D[2 * N - 1, 2 * N - 1] = 2.0 * params.gamma * params.kB * params.TN
    for m in (G, R, b, D):
        m.flags.writeable = False
    return StructMatrices(G_kappa=G, R=R, b=b, D=D)


def _as_qp(params: ChainParams, state) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(state, ChainState):
        q, p = state.q, state.p
    else:
        x = np.asarray(state, dtype=float)
        q, p = x[: params.N], x[params.N:]
    if q.shape != (params.N,) or p.shape != (params.N,):
        raise ValueError(f"state does not match N={params.N}")
    return q, p


def drift_field(params: ChainParams, state) -> np.ndarray:
    """Deterministic drift ``b x - lam (0, q**3)`` of the chain SDE."""
    q, p = _as_qp(params, state)
    w2 = params.omega**2
    force = -w2 * (2.0 + params.kappa) * q
    force[1:] += w2 * q[:-1]
    force[:-1] += w2 * q[1:]
    force -= params.lam * q**3
    force[0] -= params.gamma * p[0]
    force[-1] -= params.gamma * p[-1]
    return np.concatenate([p, force])


def hamiltonian(params: ChainParams, state) -> float:
    q, p = _as_qp(params, state)
    w2 = params.omega**2
    kinetic = 0.5 * np.sum(p**2)
    onsite = np.sum(0.5 * w2 * params.kappa * q**2 + 0.25 * params.lam * q**4)
    springs = 0.5 * w2 * (np.sum(np.diff(q) ** 2) + q[0] ** 2 + q[-1] ** 2)
    return float(kinetic + onsite + springs)


def check_drift_stability(matrices) -> tuple[bool, float]:
    """Return ``(stable, spectral_abscissa)`` for the drift matrix.

    ``matrices`` may be a :class:`StructMatrices` or a bare square array.
    """
    b = matrices.b if isinstance(matrices, StructMatrices) else np.asarray(matrices, dtype=float)
    try:
        eig = np.linalg.eigvals(b)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"eigenvalue computation for the drift matrix failed: {exc}") from exc
    if not np.all(np.isfinite(eig)):
        raise np.linalg.LinAlgError("drift matrix has non-finite eigenvalues")
    abscissa = float(np.max(eig.real))
    return abscissa < 0.0, abscissa
