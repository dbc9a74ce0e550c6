"""Pure numpy kernels, vectorized across trajectories.

Every function mutates its state arguments in place, exactly like the
compiled versions in ``_core.pyx``.
"""
import numpy as np


def _forces(q, p, w2, diag, gamma, lam):
    f = -w2 * (diag * q)
    f[:, 1:] += w2 * q[:, :-1]
    f[:, :-1] += w2 * q[:, 1:]
    f -= lam * q * q * q
    f[:, 0] -= gamma * p[:, 0]
    f[:, -1] -= gamma * p[:, -1]
    return f


def _step(q, p, coef, xi):
    w2, diag, gamma, lam, dt, s1, sN, semi = coef
    f = _forces(q, p, w2, diag, gamma, lam)
    p_new = p + dt * f
    p_new[:, 0] += s1 * xi[:, 0]
    p_new[:, -1] += sN * xi[:, 1]
    q_new = q + dt * (p_new if semi else p)
    q[...] = q_new
    p[...] = p_new


def _first_blown(q, p, guard, alive):
    bad = ~(np.all(np.abs(q) <= guard, axis=1) & np.all(np.abs(p) <= guard, axis=1))
    bad &= alive
    return np.flatnonzero(bad)


def em_advance(q, p, coef, noise, record, stride, guard):
    steps = noise.shape[1]
    n = q.shape[1]
    for s in range(steps):
        _step(q, p, coef, noise[:, s, :])
        if stride > 0 and (s + 1) % stride == 0:
            r = (s + 1) // stride - 1
            record[:, r, :n] = q
            record[:, r, n:] = p
        bad = _first_blown(q, p, guard, np.ones(q.shape[0], bool))
        if bad.size:
            return int(bad[0]), s
    return None


def em_accumulate(q, p, coef, noise, step0, burn, batch_len, acc1, acc2, guard):
    steps = noise.shape[1]
    nbatch = acc1.shape[1]
    for s in range(steps):
        _step(q, p, coef, noise[:, s, :])
        bad = _first_blown(q, p, guard, np.ones(q.shape[0], bool))
        if bad.size:
            return int(bad[0]), s
        g = step0 + s + 1 - burn
        if g <= 0:
            continue
        k = (g - 1) // batch_len
        if k >= nbatch:
            continue
        half = 0.5 * coef[4] if coef[7] else 0.0
        x = np.concatenate([q - half * p, p], axis=1)
        acc1[:, k, :] += x
        acc2[:, k, :, :] += x[:, :, None] * x[:, None, :]
    return None


def em_flow(q, p, U, coef, noise, urec, xrec, stride, guard):
    w2, diag, gamma, lam, dt, s1, sN, semi = coef
    steps = noise.shape[1]
    n = q.shape[1]
    for s in range(steps):
        Uq = U[:, :n, :]
        Up = U[:, n:, :]
        acc = -w2 * (diag * Uq)
        acc[:, 1:, :] += w2 * Uq[:, :-1, :]
        acc[:, :-1, :] += w2 * Uq[:, 1:, :]
        acc -= 3.0 * lam * (q * q)[:, :, None] * Uq
        acc[:, 0, :] -= gamma * Up[:, 0, :]
        acc[:, -1, :] -= gamma * Up[:, -1, :]
        Up_new = Up + dt * acc
        Uq_new = Uq + dt * (Up_new if semi else Up)
        U[:, :n, :] = Uq_new
        U[:, n:, :] = Up_new
        _step(q, p, coef, noise[:, s, :])
        if stride > 0 and (s + 1) % stride == 0:
            r = (s + 1) // stride - 1
            urec[:, r] = U
            xrec[:, r, :n] = q
            xrec[:, r, n:] = p
        bad = _first_blown(q, p, guard, np.ones(q.shape[0], bool))
        if bad.size:
            return int(bad[0]), s
    return None


def comm_antisym(Up, N):
    X = np.zeros((N, N))
    for i in range(1, N + 1):
        k = np.arange(i)[:, None]
        for j in range(i + 1, N + 1):
            l = np.arange(j - i)[None, :]
            X[i - 1, j - 1] = 0.5 * Up[i + l - k, j - l - k - 1].sum()
    return X


def comm_c_antisym(Up, N):
    X = np.zeros((N, N))
    for i in range(1, N + 1):
        k = np.arange(i)[:, None]
        for j in range(1, N + 1 - i):
            l = np.arange(N - i - j + 1)[None, :]
            X[i - 1, j - 1] = 0.5 * Up[i + l - k, j + l + k + 1].sum()
    return X


def comm_doubly_antisym(Up, N):
    X = np.zeros((N, N))
    for i in range(1, N + 1):
        for j in range(i + 1, N + 1 - i):
            k = np.arange(j - i)[:, None]
            l = np.arange(N - i - j + 1)[None, :]
            X[i - 1, j - 1] = -0.25 * Up[i + l + k + 1, j + l - k].sum()
    return X


def comm_first_row(Up, row, N):
    X = np.zeros((N, N))
    X[0, :] = row
    for i in range(2, N + 1):
        k = np.arange(1, i + 1)
        kk, ll = np.meshgrid(np.arange(1, i), np.arange(1, i), indexing="ij")
        mask = ll <= i - kk
        kk, ll = kk[mask], ll[mask]
        for j in range(i, N + 2 - i):
            X[i - 1, j - 1] = row[i + j - 2 * k].sum() - Up[i + 1 - kk - ll, j - kk + ll].sum()
    return X
