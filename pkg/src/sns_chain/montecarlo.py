"""Monte Carlo simulation of the chain SDE with the quartic on-site term.

The integrator is a first-order Euler scheme. The default ``"semi-implicit"``
variant updates momenta first and moves positions with the new momenta; the
``"euler"`` variant is the plain explicit Euler-Maruyama step. Both are weak
order 1, but the semi-implicit one keeps the stationary covariance bias at
O(dt) uniformly in N, while the explicit one degrades on the weakly damped
interior modes.

Every trajectory draws its Brownian increments from its own Philox stream,
spawned from ``(seed, trajectory index)``, so results do not depend on how
trajectories are split across worker threads.
"""
from __future__ import annotations

import dataclasses
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator

import numpy as np
import scipy.linalg

from . import kernels
from .chain import ChainParams, ChainState, build_struct_matrices, derive_scalars, hamiltonian
from .harmonic import assemble_phi0
from .lyapunov import expm, linear_malliavin_expectation

__all__ = [
    "ConfigError",
    "IntegratorDivergence",
    "InsufficientSamplesWarning",
    "SimConfig",
    "SimEstimate",
    "Frame",
    "LinearizedFlow",
    "CovarianceFormulaReport",
    "dt_max",
    "default_burn",
    "step_matrices",
    "readout_matrix",
    "discrete_stationary_covariance",
    "integrate",
    "write_trajectory_csv",
    "estimate_stationary_covariance",
    "estimate_first_order_fd",
    "propagate_linearized_flow",
    "covariance_identity_linear",
    "validate_covariance_formula",
]

SCHEMES = ("semi-implicit", "euler")


class ConfigError(ValueError):
    pass


class IntegratorDivergence(RuntimeError):
    def __init__(self, trajectory: int, step: int):
        super().__init__(f"integrator divergence; reduce dt (trajectory {trajectory}, step {step})")
        self.trajectory = trajectory
        self.step = step


class InsufficientSamplesWarning(RuntimeWarning):
    pass


def dt_max(params: ChainParams, q_guard: float = 5.0) -> float:
    """``0.01 min(1/gamma, 1/omega, 1/sqrt(omega^2 (4+kappa) + 3 lam q_guard^2))``."""
    stiff = params.omega**2 * (4.0 + params.kappa) + 3.0 * params.lam * q_guard**2
    return 0.01 * min(1.0 / params.gamma, 1.0 / params.omega, 1.0 / math.sqrt(stiff))


def default_burn(params: ChainParams) -> float:
    """Burn-in ``20/gamma * max(1, 1/alpha)``."""
    alpha = derive_scalars(params).alpha
    return 20.0 / params.gamma * max(1.0, 1.0 / alpha)


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings.

    ``t_total`` is the full simulated time per trajectory, burn-in included;
    statistics use the window ``(t_burn, t_total]``.
    """

    dt: float
    t_burn: float
    t_total: float
    n_traj: int = 32
    seed: int = 0
    batch_count: int = 16
    scheme: str = "semi-implicit"
    q_guard: float = 5.0
    guard: float = 1e6
    chunk_steps: int = 4096
    n_workers: int = 1

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigError(f"dt must be > 0, got {self.dt}")
        if not (self.t_total > self.t_burn >= 0):
            raise ConfigError(f"need t_total > t_burn >= 0, got t_burn={self.t_burn}, t_total={self.t_total}")
        if int(self.n_traj) != self.n_traj or self.n_traj < 1:
            raise ConfigError(f"n_traj must be a positive integer, got {self.n_traj}")
        if int(self.batch_count) != self.batch_count or self.batch_count < 8:
            raise ConfigError(f"batch_count must be an integer >= 8, got {self.batch_count}")
        if not (0 <= int(self.seed) < 2**64):
            raise ConfigError("seed must fit in 64 bits")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.guard <= 0 or self.q_guard <= 0 or self.chunk_steps < 1 or self.n_workers < 1:
            raise ConfigError("guard, q_guard, chunk_steps and n_workers must be positive")
        if self.measure_steps < self.batch_count:
            raise ConfigError("measurement window shorter than batch_count steps")

    @property
    def burn_steps(self) -> int:
        return int(round(self.t_burn / self.dt))

    @property
    def total_steps(self) -> int:
        return int(round(self.t_total / self.dt))

    @property
    def measure_steps(self) -> int:
        return self.total_steps - self.burn_steps

    @property
    def batch_len(self) -> int:
        return self.measure_steps // self.batch_count

    def validate(self, params: ChainParams) -> "SimConfig":
        """Check the step size against ``params``; returns ``self``."""
        limit = dt_max(params, self.q_guard)
        if self.dt > limit * (1 + 1e-12):
            raise ConfigError(f"dt={self.dt} exceeds dt_max={limit:.4g} for these parameters")
        A, _ = step_matrices(params, self.dt, self.scheme)
        radius = float(np.max(np.abs(np.linalg.eigvals(A))))
        if radius >= 1.0:
            raise ConfigError(f"linear step map is not contractive (spectral radius {radius:.6f}); reduce dt")
        return self

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown sim keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class SimEstimate:
    """Monte Carlo estimate with batch-means standard errors.

    ``effective_samples`` counts the independent batch means behind the
    standard error: ``n_traj * batch_count``.
    """

    mean: np.ndarray
    stderr: np.ndarray
    effective_samples: float
    n_traj: int
    batch_count: int
    batch_len: int

    def to_json_dict(self, params: ChainParams | None = None, config: SimConfig | None = None) -> dict:
        out = {"mean": self.mean.tolist(), "stderr": self.stderr.tolist(),
               "effective_samples": self.effective_samples, "n_traj": self.n_traj,
               "batch_count": self.batch_count, "batch_len": self.batch_len}
        if config is not None:
            out["config"] = config.to_dict()
        if params is not None:
            out["params"] = params.to_dict()
        return out

    def z_scores(self, reference) -> np.ndarray:
        """``|mean - reference| / stderr`` entrywise (inf where stderr is 0 and they differ)."""
        diff = np.abs(self.mean - np.asarray(reference))
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(self.stderr > 0, diff / self.stderr, np.where(diff > 0, np.inf, 0.0))
        return z


# ------------------------------------------------------------------ helpers


def _coef(params: ChainParams, dt: float, scheme: str) -> tuple:
    kT1 = params.kB * params.T1
    kTN = params.kB * params.TN
    return (params.omega**2, 2.0 + params.kappa, params.gamma, params.lam, dt,
            math.sqrt(2.0 * params.gamma * kT1 * dt), math.sqrt(2.0 * params.gamma * kTN * dt),
            1.0 if scheme == "semi-implicit" else 0.0)


def step_matrices(params: ChainParams, dt: float, scheme: str = "semi-implicit"):
    """Linear part of one step: ``x' = A x + L xi`` with ``xi`` two standard normals."""
    n = params.N
    b = build_struct_matrices(params).b
    c = _coef(params, dt, scheme)
    L = np.zeros((2 * n, 2))
    L[n, 0] = c[5]
    L[2 * n - 1, 1] = c[6]
    if scheme == "euler":
        return np.eye(2 * n) + dt * b, L
    I = np.eye(n)
    Bq, Bp = b[n:, :n], b[n:, n:]
    A = np.block([[I + dt * dt * Bq, dt * (I + dt * Bp)], [dt * Bq, I + dt * Bp]])
    L[:n] = dt * L[n:]
    return A, L


def readout_matrix(params: ChainParams, dt: float, scheme: str = "semi-implicit") -> np.ndarray:
    """Linear map from the stored state to the one entering covariance sums.

    The semi-implicit step leaves momenta half a step ahead of positions, so
    positions are read out as ``q - dt/2 p``; the explicit scheme uses ``x``.
    """
    n = params.N
    T = np.eye(2 * n)
    if scheme == "semi-implicit":
        T[:n, n:] = -0.5 * dt * np.eye(n)
    return T


def discrete_stationary_covariance(params: ChainParams, dt: float, scheme: str = "semi-implicit") -> np.ndarray:
    """Exact stationary covariance of the discretized linear (``lam = 0``) chain, as read out."""
    p0 = params.replace(lam=0.0)
    A, L = step_matrices(p0, dt, scheme)
    T = readout_matrix(p0, dt, scheme)
    return T @ scipy.linalg.solve_discrete_lyapunov(A, L @ L.T) @ T.T


def _streams(seed: int, n: int, key: int = 0) -> list:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(key,))
    return [np.random.Generator(np.random.Philox(child)) for child in ss.spawn(n)]


def _noise(gens: list, steps: int) -> np.ndarray:
    out = np.empty((len(gens), steps, 2))
    for b, g in enumerate(gens):
        out[b] = g.standard_normal((steps, 2))
    return out


def _slices(n: int, parts: int) -> list:
    edges = np.linspace(0, n, min(parts, n) + 1).astype(int)
    return [slice(a, b) for a, b in zip(edges[:-1], edges[1:])]


def _run(fn, n: int, n_workers: int):
    """Apply ``fn(slice)`` over trajectory slices; raise the first divergence in order."""
    parts = _slices(n, n_workers)
    if len(parts) == 1:
        results = [fn(parts[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(parts)) as pool:
            results = list(pool.map(fn, parts))
    for sl, res in zip(parts, results):
        if res is not None:
            raise IntegratorDivergence(sl.start + res[0], res[1])


def _initial(params: ChainParams, n_traj: int, initial) -> tuple[np.ndarray, np.ndarray]:
    n = params.N
    if initial is None:
        x = np.zeros((n_traj, 2 * n))
    elif isinstance(initial, ChainState):
        x = np.tile(initial.vector, (n_traj, 1))
    else:
        x = np.asarray(initial, dtype=float)
        x = np.tile(x, (n_traj, 1)) if x.ndim == 1 else x.copy()
    if x.shape != (n_traj, 2 * n):
        raise ValueError(f"initial state must be (2N,) or (n_traj, 2N), got {x.shape}")
    return np.ascontiguousarray(x[:, :n]), np.ascontiguousarray(x[:, n:])


def _prepare(params: ChainParams, config: SimConfig) -> tuple:
    config.validate(params)
    return _coef(params, config.dt, config.scheme)


# ------------------------------------------------------------------ trajectories


@dataclass(frozen=True)
class Frame:
    """State of every trajectory at time ``t``: ``x`` is (n_traj, 2N)."""

    t: float
    x: np.ndarray
    energy: np.ndarray


def integrate(params: ChainParams, config: SimConfig, initial=None, output_every: int = 1) -> Iterator[Frame]:
    """Yield frames from ``t = 0`` to ``t_total`` every ``output_every`` steps.

    Burn-in is not applied here; the stream starts at ``initial`` (origin by
    default). Energy is evaluated on every emitted frame.
    """
    coef = _prepare(params, config)
    if output_every < 1:
        raise ValueError("output_every must be >= 1")
    B, n = config.n_traj, params.N
    q, p = _initial(params, B, initial)
    gens = _streams(config.seed, B)

    def frame(t, x):
        return Frame(t, x, np.array([hamiltonian(params, xi) for xi in x]))

    yield frame(0.0, np.concatenate([q, p], axis=1))
    total = config.total_steps - config.total_steps % output_every
    chunk = max(output_every, config.chunk_steps - config.chunk_steps % output_every)
    done = 0
    while done < total:
        steps = min(chunk, total - done)
        noise = _noise(gens, steps)
        rec = np.zeros((B, steps // output_every, 2 * n))

        def work(sl, noise=noise, rec=rec):
            return kernels.em_advance(q[sl], p[sl], coef, noise[sl], rec[sl], output_every, config.guard)

        _run(work, B, config.n_workers)
        for r in range(rec.shape[1]):
            yield frame((done + (r + 1) * output_every) * config.dt, rec[:, r].copy())
        done += steps


def write_trajectory_csv(path, frames, params: ChainParams, trajectory: int = 0, version: str | None = None) -> None:
    """Dump one trajectory as CSV columns ``t, q1..qN, p1..pN``."""
    from .io import write_csv

    n = params.N
    header = ["t"] + [f"q{i}" for i in range(1, n + 1)] + [f"p{i}" for i in range(1, n + 1)]
    rows = ([f.t, *f.x[trajectory]] for f in frames)
    write_csv(path, header, rows, params=params, version=version)


# ------------------------------------------------------------------ stationary statistics


def _accumulate(params: ChainParams, config: SimConfig, initial=None):
    coef = _prepare(params, config)
    B, d = config.n_traj, 2 * params.N
    q, p = _initial(params, B, initial)
    gens = _streams(config.seed, B)
    nb, blen = config.batch_count, config.batch_len
    acc1 = np.zeros((B, nb, d))
    acc2 = np.zeros((B, nb, d, d))
    total = config.burn_steps + nb * blen
    done = 0
    while done < total:
        steps = min(config.chunk_steps, total - done)
        noise = _noise(gens, steps)

        def work(sl, noise=noise, step0=done):
            return kernels.em_accumulate(q[sl], p[sl], coef, noise[sl], step0, config.burn_steps, blen,
                                         acc1[sl], acc2[sl], config.guard)

        _run(work, B, config.n_workers)
        done += steps
    return acc1 / blen, acc2 / blen


def _batch_values(m1: np.ndarray, m2: np.ndarray):
    """Per-batch linearized covariance values whose average is the pooled estimate."""
    d = m1.shape[-1]
    m1 = m1.reshape(-1, d)
    m2 = m2.reshape(-1, d, d)
    mu = m1.mean(axis=0)
    y = m2 - m1[:, :, None] * mu[None, None, :] - mu[None, :, None] * m1[:, None, :] + np.outer(mu, mu)
    return y


def _estimate(y: np.ndarray, config: SimConfig) -> SimEstimate:
    M = y.shape[0]
    return SimEstimate(mean=y.mean(axis=0), stderr=y.std(axis=0, ddof=1) / math.sqrt(M),
                       effective_samples=float(M), n_traj=config.n_traj,
                       batch_count=config.batch_count, batch_len=config.batch_len)


def estimate_stationary_covariance(params: ChainParams, config: SimConfig, initial=None) -> SimEstimate:
    """Time- and ensemble-averaged covariance, re-centered by the empirical mean."""
    m1, m2 = _accumulate(params, config, initial)
    return _estimate(_batch_values(m1, m2), config)


def estimate_first_order_fd(params: ChainParams, lambda_probe: float, config: SimConfig,
                            baseline: str = "crn") -> SimEstimate:
    """Forward difference ``(Phi^lam - Phi^0) / lam`` in physical units.

    With ``baseline="crn"`` the ``lam = 0`` run reuses the Brownian increments
    of the ``lam`` run and the difference is formed batch by batch. With
    ``baseline="exact"`` the closed-form ``Phi0`` is subtracted instead.
    """
    if not lambda_probe > 0:
        raise ValueError("lambda_probe must be > 0")
    if baseline not in ("crn", "exact"):
        raise ValueError("baseline must be 'crn' or 'exact'")
    y_lam = _batch_values(*_accumulate(params.replace(lam=lambda_probe), config))
    if baseline == "exact":
        y0 = assemble_phi0(params.replace(lam=0.0)).assembled[None]
    else:
        y0 = _batch_values(*_accumulate(params.replace(lam=0.0), config))
    return _estimate((y_lam - y0) / lambda_probe, config)


# ------------------------------------------------------------------ linearized flow


@dataclass(frozen=True)
class LinearizedFlow:
    """Per-trajectory flow samples: ``U`` is (n_traj, n_times, 2N, 2N), ``U[:, 0] = I``."""

    times: np.ndarray
    U: np.ndarray
    x: np.ndarray


def _flow(params: ChainParams, config: SimConfig, coef: tuple, q, p, steps: int, stride: int, gens):
    B, d = q.shape[0], 2 * params.N
    nrec = steps // stride
    U = np.ascontiguousarray(np.broadcast_to(np.eye(d), (B, d, d)))
    urec = np.zeros((B, nrec + 1, d, d))
    xrec = np.zeros((B, nrec + 1, d))
    urec[:, 0] = U
    xrec[:, 0] = np.concatenate([q, p], axis=1)
    done = 0
    chunk = max(stride, config.chunk_steps - config.chunk_steps % stride)
    while done < nrec * stride:
        n_s = min(chunk, nrec * stride - done)
        noise = _noise(gens, n_s)
        r0 = 1 + done // stride
        ur = np.zeros((B, n_s // stride, d, d))
        xr = np.zeros((B, n_s // stride, d))

        def work(sl, noise=noise, ur=ur, xr=xr):
            return kernels.em_flow(q[sl], p[sl], U[sl], coef, noise[sl], ur[sl], xr[sl], stride, config.guard)

        _run(work, B, config.n_workers)
        urec[:, r0:r0 + ur.shape[1]] = ur
        xrec[:, r0:r0 + xr.shape[1]] = xr
        done += n_s
    return urec, xrec


def propagate_linearized_flow(params: ChainParams, config: SimConfig, t_max: float, initial=None,
                              stride: int = 1, horizon: float = 50.0) -> LinearizedFlow:
    """Jointly step the state and ``U`` with ``dU = (b - 3 lam C(x)) U dt``.

    ``U`` is the exact Jacobian of the discrete step map, evaluated at the
    pre-step state.
    """
    if not 0 < t_max <= horizon:
        raise ValueError(f"t_max must lie in (0, {horizon}]")
    coef = _prepare(params, config)
    q, p = _initial(params, config.n_traj, initial)
    steps = int(round(t_max / config.dt))
    urec, xrec = _flow(params, config, coef, q, p, steps, stride, _streams(config.seed, config.n_traj))
    times = config.dt * stride * np.arange(urec.shape[1])
    return LinearizedFlow(times, urec, xrec)


# ------------------------------------------------------------------ covariance identity


def _noise_vectors(params: ChainParams) -> np.ndarray:
    """Rows are the constant noise fields ``X_1`` and ``X_N``."""
    n = params.N
    X = np.zeros((2, 2 * n))
    X[0, n] = math.sqrt(2.0 * params.gamma * params.kB * params.T1)
    X[1, 2 * n - 1] = math.sqrt(2.0 * params.gamma * params.kB * params.TN)
    return X


def covariance_identity_linear(params: ChainParams, t: float, steps: int = 200, order: int = 8) -> dict:
    """Three deterministic routes to the time-t covariance for ``lam = 0``.

    ``lhs`` uses ``Phi0 - e^{bt} Phi0 e^{b^T t}``; ``rhs`` integrates
    ``e^{bs} D e^{b^T s}``; ``malliavin`` integrates ``U_t V_s D V_s^T U_t^T``
    with ``V_s`` the inverse flow.
    """
    p0 = params.replace(lam=0.0)
    b = build_struct_matrices(p0).b
    Phi0 = assemble_phi0(p0).assembled
    Et = expm(b * t)
    lhs = Phi0 - Et @ Phi0 @ Et.T
    X = _noise_vectors(p0)
    rhs = linear_malliavin_expectation(b, X, t, steps=steps, order=order)
    D = X.T @ X
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, t, steps + 1)
    mal = np.zeros_like(b)
    for a, c in zip(edges[:-1], edges[1:]):
        for xj, wj in zip(x, w):
            s = 0.5 * (c - a) * (xj + 1.0) + a
            Y = Et @ np.linalg.inv(expm(b * s))
            mal += 0.5 * (c - a) * wj * (Y @ D @ Y.T)
    return {"lhs": lhs, "rhs": rhs, "malliavin": mal}


@dataclass(frozen=True)
class CovarianceFormulaReport:
    """Nested Monte Carlo check of the time-t covariance identity.

    ``lhs`` estimates the averaged covariance ``mu(C_t)``, ``rhs`` the
    integral of squared mean flows, and ``malliavin`` the averaged Malliavin
    matrix. Differences are paired per outer sample; eigenvalue error bars
    are the Frobenius norm of the entrywise standard-error matrix.
    """

    t: float
    lhs: np.ndarray
    rhs: np.ndarray
    malliavin: np.ndarray
    lhs_stderr: np.ndarray
    equality_diff_stderr: np.ndarray
    inequality_diff_stderr: np.ndarray
    equality_max_abs_eig: float
    equality_err: float
    inequality_max_eig: float
    inequality_err: float
    n_outer: int
    n_inner: int
    insufficient_samples: bool

    @property
    def equality_ok(self) -> bool:
        return self.equality_max_abs_eig <= 3.0 * self.equality_err

    @property
    def inequality_ok(self) -> bool:
        return self.inequality_max_eig <= 3.0 * self.inequality_err

    def to_json_dict(self) -> dict:
        return {
            "t": self.t, "n_outer": self.n_outer, "n_inner": self.n_inner,
            "lhs": self.lhs.tolist(), "rhs": self.rhs.tolist(), "malliavin": self.malliavin.tolist(),
            "equality_max_abs_eig": self.equality_max_abs_eig, "equality_err": self.equality_err,
            "inequality_max_eig": self.inequality_max_eig, "inequality_err": self.inequality_err,
            "equality_ok": self.equality_ok, "inequality_ok": self.inequality_ok,
            "insufficient_samples": self.insufficient_samples,
        }


def _sym_eigs(M: np.ndarray) -> np.ndarray:
    return np.linalg.eigvalsh(0.5 * (M + M.T))


def validate_covariance_formula(params: ChainParams, config: SimConfig, t: float,
                                n_inner: int = 64, n_outer: int | None = None) -> CovarianceFormulaReport:
    """Nested Monte Carlo comparison of ``mu(C_t)``, the flow integral and ``mu(E M_t)``.

    Outer points are end states of ``n_outer`` independent runs of length
    ``t_burn`` from the origin. From each point ``n_inner`` trajectories are
    run to time ``t``. The s-integral is a left Riemann sum on the step grid,
    with noise fields taken from the discrete step so that the identity is
    exact at the discrete level when ``lam = 0``. Squared means use the
    unbiased ``mean (x) mean - S / n_inner`` estimator.
    """
    if params.N > 4:
        raise ValueError("nested Monte Carlo is limited to N <= 4")
    if n_inner < 2:
        raise ValueError("n_inner must be >= 2")
    coef = _prepare(params, config)
    M = config.n_traj if n_outer is None else int(n_outer)
    if M < 2:
        raise ValueError("need at least 2 outer samples")
    d = 2 * params.N
    dt = config.dt

    q, p = _initial(params, M, None)
    burn = config.burn_steps
    gens = _streams(config.seed, M, key=0)
    done = 0
    while done < burn:
        steps = min(config.chunk_steps, burn - done)
        noise = _noise(gens, steps)

        def work(sl, noise=noise):
            return kernels.em_advance(q[sl], p[sl], coef, noise[sl], np.zeros((sl.stop - sl.start, 0, d)),
                                      0, config.guard)

        _run(work, M, config.n_workers)
        done += steps
    outer = np.concatenate([q, p], axis=1)

    _, L = step_matrices(params, dt, config.scheme)
    Xk = L / math.sqrt(dt)  # columns: discrete noise fields
    n_t = int(round(t / dt))
    C = np.zeros((M, d, d))
    R = np.zeros((M, d, d))
    Mal = np.zeros((M, d, d))
    K = n_inner
    for m in range(M):
        qi, pi = _initial(params, K, outer[m])
        gens_m = _streams(config.seed, K, key=1 + m)
        urec, xrec = _flow(params, config, coef, qi, pi, n_t, 1, gens_m)
        xt = xrec[:, -1]
        C[m] = np.cov(xt, rowvar=False, ddof=1)
        W = urec[:, :-1] @ Xk  # (K, n_t, d, 2); left Riemann points s = 0..t-dt
        Wbar = W.mean(axis=0)
        dev = W - Wbar
        sq_mean = np.einsum("rik,rjk->ij", Wbar, Wbar)
        var_mean = np.einsum("arik,arjk->ij", dev, dev) / (K * (K - 1))
        R[m] = dt * (sq_mean - var_mean)
        Mal[m] = dt * np.einsum("arik,arjk->ij", W, W) / K

    sq = math.sqrt(M)
    eq = C - R
    ineq = C - Mal
    eq_se = eq.std(axis=0, ddof=1) / sq
    ineq_se = ineq.std(axis=0, ddof=1) / sq
    lhs = C.mean(axis=0)
    lhs_se = C.std(axis=0, ddof=1) / sq
    eq_err = float(np.linalg.norm(eq_se))
    ineq_err = float(np.linalg.norm(ineq_se))
    insufficient = bool(np.linalg.norm(lhs_se) > 0.3 * np.linalg.norm(lhs))
    if insufficient:
        warnings.warn("statistical error exceeds 30% of the signal; increase samples",
                      InsufficientSamplesWarning, stacklevel=2)
    return CovarianceFormulaReport(
        t=float(n_t * dt), lhs=lhs, rhs=R.mean(axis=0), malliavin=Mal.mean(axis=0), lhs_stderr=lhs_se,
        equality_diff_stderr=eq_se, inequality_diff_stderr=ineq_se,
        equality_max_abs_eig=float(np.max(np.abs(_sym_eigs(eq.mean(axis=0))))), equality_err=eq_err,
        inequality_max_eig=float(np.max(_sym_eigs(ineq.mean(axis=0)))), inequality_err=ineq_err,
        n_outer=M, n_inner=K, insufficient_samples=insufficient,
    )

