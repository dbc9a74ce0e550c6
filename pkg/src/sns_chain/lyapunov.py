"""Stationary Lyapunov equations ``b Phi + Phi b^T = H`` and matrix symmetries.

The production solver reduces ``b`` to real Schur form (Bartels-Stewart, via
LAPACK ``trsyl`` in scipy). :func:`solve_lyapunov_kron` is a plain Kronecker
linear solve kept as an independent oracle for small orders.
"""
from __future__ import annotations

import enum
import warnings

import numpy as np
import scipy.linalg

__all__ = [
    "SymmetryTag",
    "UnstableDriftError",
    "HorizonTooShortError",
    "IllConditionedWarning",
    "cross_transpose",
    "swap_matrix",
    "classify_symmetry",
    "solve_lyapunov",
    "solve_lyapunov_kron",
    "lyapunov_residual",
    "integral_form",
    "linear_malliavin_expectation",
    "expm",
]

expm = scipy.linalg.expm


class UnstableDriftError(ValueError):
    """Raised when the drift has an eigenvalue with nonnegative real part."""


class HorizonTooShortError(ValueError):
    def __init__(self, message: str, suggested_horizon: float):
        super().__init__(message)
        self.suggested_horizon = suggested_horizon


class IllConditionedWarning(RuntimeWarning):
    pass


class SymmetryTag(str, enum.Enum):
    SYMMETRIC = "symmetric"
    ANTISYMMETRIC = "antisymmetric"
    C_SYMMETRIC = "c_symmetric"
    C_ANTISYMMETRIC = "c_antisymmetric"
    CT_SYMMETRIC = "ct_symmetric"
    CT_ANTISYMMETRIC = "ct_antisymmetric"
    NONE = "none"

    def __str__(self):
        return self.value


def _square(M, name="M") -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    return M


def cross_transpose(M) -> np.ndarray:
    """Transpose across the anti-diagonal: ``(M^C)_ij = M_{K+1-j, K+1-i}``."""
    M = _square(M)
    return M[::-1, ::-1].T.copy()


def swap_matrix(order: int) -> np.ndarray:
    """Block swap ``J = [[0, 1], [1, 0]]`` of even ``order``."""
    if order % 2:
        raise ValueError(f"CT symmetry needs an even order, got {order}")
    n = order // 2
    J = np.zeros((order, order))
    J[:n, n:] = np.eye(n)
    J[n:, :n] = np.eye(n)
    return J


def classify_symmetry(M, tol: float = 1e-12, include_ct: bool = False, atol: float = 0.0) -> set:
    """Return every :class:`SymmetryTag` whose identity holds for ``M``.

    A tag holds when ``max|lhs - rhs| <= tol * max|M| + atol``. Pass ``atol``
    when ``M`` may be round-off noise around zero. The CT tags are only
    tested when ``include_ct`` is set, which requires an even order.
    """
    M = _square(M)
    scale = (tol * np.max(np.abs(M)) if M.size else 0.0) + atol
    MC = cross_transpose(M)
    candidates = {
        SymmetryTag.SYMMETRIC: M.T,
        SymmetryTag.ANTISYMMETRIC: -M.T,
        SymmetryTag.C_SYMMETRIC: MC,
        SymmetryTag.C_ANTISYMMETRIC: -MC,
    }
    if include_ct:
        J = swap_matrix(M.shape[0])
        JMJ = J @ M @ J
        candidates[SymmetryTag.CT_SYMMETRIC] = JMJ
        candidates[SymmetryTag.CT_ANTISYMMETRIC] = -JMJ
        lhs = {SymmetryTag.CT_SYMMETRIC: MC, SymmetryTag.CT_ANTISYMMETRIC: MC}
    else:
        lhs = {}
    tags = {tag for tag, rhs in candidates.items() if np.max(np.abs(lhs.get(tag, M) - rhs), initial=0.0) <= scale}
    return tags or {SymmetryTag.NONE}


def lyapunov_residual(b, Phi, H) -> float:
    """``max|b Phi + Phi b^T - H|``."""
    return float(np.max(np.abs(b @ Phi + Phi @ b.T - H), initial=0.0))


def _check_stable(b: np.ndarray) -> np.ndarray:
    eig = np.linalg.eigvals(b)
    if np.max(eig.real) >= 0.0:
        raise UnstableDriftError(
            f"no unique stationary solution: drift has spectral abscissa {np.max(eig.real):.3e} >= 0"
        )
    return eig


def solve_lyapunov(b, H, rtol: float = 1e-10, cond_limit: float = 1e12) -> np.ndarray:
    """Solve ``b Phi + Phi b^T = H`` for a stable ``b``.

    One step of iterative refinement is applied when the first residual
    exceeds ``rtol * max|H|``. An :class:`IllConditionedWarning` is emitted
    when the Lyapunov operator's eigenvalue spread exceeds ``cond_limit`` or
    the refined residual is still above tolerance.
    """
    b = _square(b, "b")
    H = _square(H, "H")
    if b.shape != H.shape:
        raise ValueError(f"b and H orders differ: {b.shape} vs {H.shape}")
    eig = _check_stable(b)
    pair = np.abs(eig[:, None] + eig[None, :])
    cond = float(pair.max() / pair.min())
    if cond > cond_limit:
        warnings.warn(f"Lyapunov operator condition estimate {cond:.2e} exceeds {cond_limit:.0e}",
                      IllConditionedWarning, stacklevel=2)

    Phi = scipy.linalg.solve_continuous_lyapunov(b, H)
    target = rtol * max(np.max(np.abs(H), initial=0.0), np.finfo(float).tiny)
    if lyapunov_residual(b, Phi, H) > target:
        Phi = Phi + scipy.linalg.solve_continuous_lyapunov(b, H - (b @ Phi + Phi @ b.T))
        res = lyapunov_residual(b, Phi, H)
        if res > target:
            warnings.warn(f"Lyapunov residual {res:.2e} above tolerance {target:.2e}",
                          IllConditionedWarning, stacklevel=2)
    return Phi


def solve_lyapunov_kron(b, H, max_order: int = 24) -> np.ndarray:
    """Dense Kronecker solve of ``(I (x) b + b (x) I) vec(Phi) = vec(H)``."""
    b = _square(b, "b")
    H = _square(H, "H")
    n = b.shape[0]
    if n > max_order:
        raise ValueError(f"Kronecker oracle limited to order <= {max_order}, got {n}")
    I = np.eye(n)
    op = np.kron(I, b) + np.kron(b, I)
    vec = np.linalg.solve(op, H.reshape(-1, order="F"))
    return vec.reshape((n, n), order="F")


def _gauss_panels(b: np.ndarray, t_end: float, panels: int, order: int):
    """Yield ``(weight, e^{b t})`` over a composite Gauss-Legendre rule on [0, t_end]."""
    x, w = np.polynomial.legendre.leggauss(order)
    width = t_end / panels
    offsets = 0.5 * width * (x + 1.0)
    node_exp = [expm(b * s) for s in offsets]
    step = expm(b * width)
    E0 = np.eye(b.shape[0])
    for _ in range(panels):
        for wj, Pj in zip(w, node_exp):
            yield 0.5 * width * wj, E0 @ Pj
        E0 = E0 @ step


def integral_form(b, H, horizon: float = 40.0, steps: int = 400, order: int = 8,
                  decay_tol: float = 1e-8) -> np.ndarray:
    """``-int_0^horizon e^{bt} H e^{b^T t} dt`` by composite Gauss-Legendre quadrature.

    Raises :class:`HorizonTooShortError` if ``||e^{b horizon}||_2 >= decay_tol``.
    """
    b = _square(b, "b")
    H = _square(H, "H")
    eig = _check_stable(b)
    tail = np.linalg.norm(expm(b * horizon), 2)
    if tail >= decay_tol:
        abscissa = float(np.max(eig.real))
        suggested = float(np.ceil(1.5 * np.log(1.0 / decay_tol) / -abscissa))
        raise HorizonTooShortError(
            f"horizon {horizon} too short: ||e^(b*horizon)|| = {tail:.2e}; try horizon >= {suggested}",
            suggested,
        )
    out = np.zeros_like(H)
    for weight, E in _gauss_panels(b, horizon, steps, order):
        out += weight * (E @ H @ E.T)
    return -out


def linear_malliavin_expectation(b, noise_vectors, t: float, steps: int = 400, order: int = 8) -> np.ndarray:
    """``int_0^t sum_k (e^{bs} X_k)(e^{bs} X_k)^T ds`` for constant noise fields ``X_k``.

    In the linear case this is both the expected Malliavin matrix and the
    time-t covariance started from a point.
    """
    b = _square(b, "b")
    X = np.atleast_2d(np.asarray(noise_vectors, dtype=float))
    if X.shape[1] != b.shape[0]:
        raise ValueError("noise vectors must have the drift's order")
    if t < 0:
        raise ValueError("t must be >= 0")
    Q = X.T @ X
    out = np.zeros_like(b)
    if t == 0:
        return out
    for weight, E in _gauss_panels(b, t, steps, order):
        out += weight * (E @ Q @ E.T)
    return out
