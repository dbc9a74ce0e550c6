"""Explicit solutions of ``[G, X] = U`` for the tridiagonal coupling ``G``.

``G`` has constant diagonal, so the commutator and all formulas below are
independent of ``kappa``. Entries of ``U`` whose index is 0 or N+1 are zero;
this is implemented by zero-padding ``U``.
"""
import numpy as np

from . import kernels
from .chain import tridiag

__all__ = [
    "NoSolutionError",
    "commutator",
    "solve_commutator_antisym",
    "solve_commutator_c_antisym",
    "solve_commutator_doubly_antisym",
    "reconstruct_from_first_row",
]


class NoSolutionError(ValueError):
    pass


def commutator(X: np.ndarray, kappa: float = 0.0) -> np.ndarray:
    """``G_kappa X - X G_kappa``."""
    G = tridiag(X.shape[0], 2.0 + kappa)
    return G @ X - X @ G


def _padded(U) -> np.ndarray:
    U = np.asarray(U, dtype=float)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise ValueError(f"U must be square, got shape {U.shape}")
    Up = np.zeros((U.shape[0] + 2, U.shape[0] + 2))
    Up[1:-1, 1:-1] = U
    return Up


def _fill(region: np.ndarray, mask: np.ndarray, sign_t: float | None, sign_c: float | None) -> np.ndarray:
    """Extend ``region`` (valid where ``mask``) using transpose/cross-transpose symmetries.

    ``sign_t`` is +1 (symmetric), -1 (antisymmetric) or None (no symmetry);
    likewise ``sign_c`` for the cross-diagonal. Entries with no image inside
    the mask are forced to zero.
    """
    n = region.shape[0]
    K = n - 1
    i, j = np.indices((n, n))
    out = np.where(mask, region, 0.0)
    done = mask.copy()
    images = []
    if sign_t is not None:
        images.append((j, i, sign_t))
    if sign_c is not None:
        images.append((K - j, K - i, sign_c))
    if sign_t is not None and sign_c is not None:
        images.append((K - i, K - j, sign_t * sign_c))
    for ii, jj, sgn in images:
        take = ~done & mask[ii, jj]
        out[take] = sgn * region[ii[take], jj[take]]
        done |= take
    return out


def _checked(X: np.ndarray, U: np.ndarray, tol: float, what: str) -> np.ndarray:
    res = np.max(np.abs(commutator(X) - U), initial=0.0)
    scale = np.max(np.abs(U), initial=0.0)
    if res > tol * max(scale, np.finfo(float).tiny):
        raise NoSolutionError(f"no {what} solution: commutator residual {res:.3e} (|U|max = {scale:.3e})")
    return X


def solve_commutator_antisym(U, tol: float = 1e-10) -> np.ndarray:
    """Antisymmetric ``X`` with ``[G, X] = U``.

    ``X_ij = 1/2 sum_{k=0}^{i-1} sum_{l=0}^{j-i-1} U_{i+l-k, j-l-k-1}`` for ``i < j``.
    """
    U = np.asarray(U, dtype=float)
    N = U.shape[0]
    region = kernels.comm_antisym(_padded(U), N)
    X = _fill(region, np.triu(np.ones((N, N), bool), 1), -1.0, None)
    return _checked(X, U, tol, "antisymmetric")


def solve_commutator_c_antisym(U, tol: float = 1e-10) -> np.ndarray:
    """c-antisymmetric ``X`` with ``[G, X] = U``, from the region ``i + j <= N``."""
    U = np.asarray(U, dtype=float)
    N = U.shape[0]
    region = kernels.comm_c_antisym(_padded(U), N)
    i, j = np.indices((N, N)) + 1
    X = _fill(region, i + j <= N, None, -1.0)
    return _checked(X, U, tol, "c-antisymmetric")


def solve_commutator_doubly_antisym(U, tol: float = 1e-10) -> np.ndarray:
    """``X`` antisymmetric and c-antisymmetric with ``[G, X] = U``."""
    U = np.asarray(U, dtype=float)
    N = U.shape[0]
    region = kernels.comm_doubly_antisym(_padded(U), N)
    i, j = np.indices((N, N)) + 1
    X = _fill(region, (i < j) & (i + j <= N), -1.0, -1.0)
    return _checked(X, U, tol, "antisymmetric and c-antisymmetric")


def reconstruct_from_first_row(U, first_row, tol: float = 1e-10) -> np.ndarray:
    """Symmetric, c-symmetric ``X`` with ``[G, X] = U`` and the given first row.

    The solution of ``[G, X] = U`` is fixed only up to a polynomial in ``G``;
    the first row supplies those N free values.
    """
    U = np.asarray(U, dtype=float)
    N = U.shape[0]
    row = np.asarray(first_row, dtype=float)
    if row.shape != (N,):
        raise ValueError(f"first_row must have length {N}")
    region = kernels.comm_first_row(_padded(U), np.ascontiguousarray(row), N)
    i, j = np.indices((N, N)) + 1
    mask = (i == 1) | ((i <= j) & (i + j <= N + 1))
    X = _fill(region, mask, 1.0, 1.0)
    return _checked(X, U, tol, "symmetric c-symmetric")
