# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels. Signatures mirror :mod:`sns_chain.kernels._pure`."""

from libc.math cimport fabs, isfinite

ctypedef double f8


cdef inline bint _blown(f8[:, ::1] q, f8[:, ::1] p, Py_ssize_t b, Py_ssize_t n, f8 guard) noexcept nogil:
    cdef Py_ssize_t i
    for i in range(n):
        if not (fabs(q[b, i]) <= guard and fabs(p[b, i]) <= guard):
            return True
    return False


cdef inline void _em_step(f8[:, ::1] q, f8[:, ::1] p, f8[::1] fq, f8[::1] fp, Py_ssize_t b, Py_ssize_t n,
                          f8 w2, f8 diag, f8 gamma, f8 lam, f8 dt, f8 s1, f8 sN, bint semi,
                          f8 xi1, f8 xiN) noexcept nogil:
    cdef Py_ssize_t i
    cdef f8 qi, left, right, force
    for i in range(n):
        qi = q[b, i]
        left = q[b, i - 1] if i > 0 else 0.0
        right = q[b, i + 1] if i < n - 1 else 0.0
        force = -w2 * (diag * qi - left - right) - lam * qi * qi * qi
        if i == 0:
            force = force - gamma * p[b, i]
        if i == n - 1:
            force = force - gamma * p[b, i]
        fp[i] = p[b, i] + dt * force
    fp[0] = fp[0] + s1 * xi1
    fp[n - 1] = fp[n - 1] + sN * xiN
    for i in range(n):
        # semi-implicit: positions move with the updated momenta
        fq[i] = q[b, i] + dt * (fp[i] if semi else p[b, i])
    for i in range(n):
        q[b, i] = fq[i]
        p[b, i] = fp[i]


def em_advance(f8[:, ::1] q, f8[:, ::1] p, tuple coef, f8[:, :, ::1] noise,
               f8[:, :, ::1] record, Py_ssize_t stride, f8 guard):
    """Advance each trajectory over ``noise.shape[1]`` steps, recording every ``stride``.

    Returns the (trajectory, step) of the first divergence or ``None``.
    """
    cdef f8 w2 = coef[0], diag = coef[1], gamma = coef[2], lam = coef[3], dt = coef[4]
    cdef f8 s1 = coef[5], sN = coef[6]
    cdef bint semi = coef[7] != 0
    cdef Py_ssize_t B = q.shape[0], n = q.shape[1], steps = noise.shape[1]
    cdef Py_ssize_t b, s, i, r
    cdef f8[::1] fq = q[0].copy()
    cdef f8[::1] fp = p[0].copy()
    cdef Py_ssize_t bad_b = -1, bad_s = -1
    with nogil:
        for b in range(B):
            for s in range(steps):
                _em_step(q, p, fq, fp, b, n, w2, diag, gamma, lam, dt, s1, sN, semi, noise[b, s, 0], noise[b, s, 1])
                if stride > 0 and (s + 1) % stride == 0:
                    r = (s + 1) // stride - 1
                    for i in range(n):
                        record[b, r, i] = q[b, i]
                        record[b, r, n + i] = p[b, i]
                if _blown(q, p, b, n, guard):
                    bad_b = b
                    bad_s = s
                    break
            if bad_b >= 0:
                break
    if bad_b >= 0:
        return (bad_b, bad_s)
    return None


def em_accumulate(f8[:, ::1] q, f8[:, ::1] p, tuple coef, f8[:, :, ::1] noise,
                  Py_ssize_t step0, Py_ssize_t burn, Py_ssize_t batch_len,
                  f8[:, :, ::1] acc1, f8[:, :, :, ::1] acc2, f8 guard):
    """Advance and add ``x`` and ``x x^T`` into per-batch sums after burn-in.

    For the semi-implicit scheme positions are read out at the half step,
    ``q - dt/2 p``, to pair them with the staggered momenta.
    """
    cdef f8 w2 = coef[0], diag = coef[1], gamma = coef[2], lam = coef[3], dt = coef[4]
    cdef f8 s1 = coef[5], sN = coef[6]
    cdef bint semi = coef[7] != 0
    cdef f8 half = 0.5 * dt if semi else 0.0
    cdef Py_ssize_t B = q.shape[0], n = q.shape[1], steps = noise.shape[1]
    cdef Py_ssize_t nbatch = acc1.shape[1], m = 2 * n
    cdef Py_ssize_t b, s, i, j, k, g
    cdef f8[::1] fq = q[0].copy()
    cdef f8[::1] fp = p[0].copy()
    cdef f8[::1] x = acc1[0, 0].copy()
    cdef Py_ssize_t bad_b = -1, bad_s = -1
    with nogil:
        for b in range(B):
            for s in range(steps):
                _em_step(q, p, fq, fp, b, n, w2, diag, gamma, lam, dt, s1, sN, semi, noise[b, s, 0], noise[b, s, 1])
                if _blown(q, p, b, n, guard):
                    bad_b = b
                    bad_s = s
                    break
                g = step0 + s + 1 - burn
                if g <= 0:
                    continue
                k = (g - 1) // batch_len
                if k >= nbatch:
                    continue
                for i in range(n):
                    x[i] = q[b, i] - half * p[b, i]
                    x[n + i] = p[b, i]
                for i in range(m):
                    acc1[b, k, i] += x[i]
                    for j in range(m):
                        acc2[b, k, i, j] += x[i] * x[j]
            if bad_b >= 0:
                break
    if bad_b >= 0:
        return (bad_b, bad_s)
    return None


def em_flow(f8[:, ::1] q, f8[:, ::1] p, f8[:, :, ::1] U, tuple coef, f8[:, :, ::1] noise,
            f8[:, :, :, ::1] urec, f8[:, :, ::1] xrec, Py_ssize_t stride, f8 guard):
    """Joint Euler update of the state and its linearized flow ``U``."""
    cdef f8 w2 = coef[0], diag = coef[1], gamma = coef[2], lam = coef[3], dt = coef[4]
    cdef f8 s1 = coef[5], sN = coef[6]
    cdef bint semi = coef[7] != 0
    cdef Py_ssize_t B = q.shape[0], n = q.shape[1], steps = noise.shape[1]
    cdef Py_ssize_t m = 2 * n
    cdef Py_ssize_t b, s, i, c, r
    cdef f8[::1] fq = q[0].copy()
    cdef f8[::1] fp = p[0].copy()
    cdef f8[:, ::1] Unew = U[0].copy()
    cdef f8 left, right, acc, q2
    cdef Py_ssize_t bad_b = -1, bad_s = -1
    with nogil:
        for b in range(B):
            for s in range(steps):
                # flow uses the pre-step state
                for i in range(n):
                    q2 = q[b, i] * q[b, i]
                    for c in range(m):
                        left = U[b, i - 1, c] if i > 0 else 0.0
                        right = U[b, i + 1, c] if i < n - 1 else 0.0
                        acc = -w2 * (diag * U[b, i, c] - left - right) - 3.0 * lam * q2 * U[b, i, c]
                        if i == 0 or i == n - 1:
                            acc = acc - gamma * U[b, n + i, c]
                        Unew[n + i, c] = U[b, n + i, c] + dt * acc
                        Unew[i, c] = U[b, i, c] + dt * (Unew[n + i, c] if semi else U[b, n + i, c])
                for i in range(m):
                    for c in range(m):
                        U[b, i, c] = Unew[i, c]
                _em_step(q, p, fq, fp, b, n, w2, diag, gamma, lam, dt, s1, sN, semi, noise[b, s, 0], noise[b, s, 1])
                if stride > 0 and (s + 1) % stride == 0:
                    r = (s + 1) // stride - 1
                    for i in range(m):
                        for c in range(m):
                            urec[b, r, i, c] = U[b, i, c]
                    for i in range(n):
                        xrec[b, r, i] = q[b, i]
                        xrec[b, r, n + i] = p[b, i]
                if _blown(q, p, b, n, guard):
                    bad_b = b
                    bad_s = s
                    break
            if bad_b >= 0:
                break
    if bad_b >= 0:
        return (bad_b, bad_s)
    return None


def comm_antisym(f8[:, ::1] Up, Py_ssize_t N):
    """Upper triangle of the antisymmetric solution of ``[G, X] = U``."""
    import numpy as np
    out = np.zeros((N, N))
    cdef f8[:, ::1] X = out
    cdef Py_ssize_t i, j, k, l
    cdef f8 acc
    with nogil:
        for i in range(1, N + 1):
            for j in range(i + 1, N + 1):
                acc = 0.0
                for k in range(i):
                    for l in range(j - i):
                        acc += Up[i + l - k, j - l - k - 1]
                X[i - 1, j - 1] = 0.5 * acc
    return out


def comm_c_antisym(f8[:, ::1] Up, Py_ssize_t N):
    """Region ``i + j <= N`` of the c-antisymmetric solution of ``[G, X] = U``."""
    import numpy as np
    out = np.zeros((N, N))
    cdef f8[:, ::1] X = out
    cdef Py_ssize_t i, j, k, l
    cdef f8 acc
    with nogil:
        for i in range(1, N + 1):
            for j in range(1, N + 1 - i):
                acc = 0.0
                for k in range(i):
                    for l in range(N - i - j + 1):
                        acc += Up[i + l - k, j + l + k + 1]
                X[i - 1, j - 1] = 0.5 * acc
    return out


def comm_doubly_antisym(f8[:, ::1] Up, Py_ssize_t N):
    """Region ``i < j, i + j <= N`` of the doubly antisymmetric solution."""
    import numpy as np
    out = np.zeros((N, N))
    cdef f8[:, ::1] X = out
    cdef Py_ssize_t i, j, k, l
    cdef f8 acc
    with nogil:
        for i in range(1, N + 1):
            for j in range(i + 1, N + 1 - i):
                acc = 0.0
                for k in range(j - i):
                    for l in range(N - i - j + 1):
                        acc += Up[i + l + k + 1, j + l - k]
                X[i - 1, j - 1] = -0.25 * acc
    return out


def comm_first_row(f8[:, ::1] Up, f8[::1] row, Py_ssize_t N):
    """Region ``1 < i <= j, i + j <= N + 1`` from the first row and ``U``."""
    import numpy as np
    out = np.zeros((N, N))
    cdef f8[:, ::1] X = out
    cdef Py_ssize_t i, j, k, l
    cdef f8 acc
    with nogil:
        for j in range(N):
            X[0, j] = row[j]
        for i in range(2, N + 1):
            for j in range(i, N + 2 - i):
                acc = 0.0
                for k in range(1, i + 1):
                    acc += row[i + j - 2 * k]
                for k in range(1, i):
                    for l in range(1, i - k + 1):
                        acc -= Up[i + 1 - k - l, j - k + l]
                X[i - 1, j - 1] = acc
    return out
