"""Time the compiled kernels against the numpy fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints one line per kernel with the best wall time of each backend and the
speed-up. Without the compiled extension only the fallback is timed.
"""
import argparse
import timeit

import numpy as np

from sns_chain.commutator import _padded
from sns_chain.kernels import backends


def _coef(dt=0.005, lam=0.3):
    return (1.0, 2.0, 1.0, lam, dt, np.sqrt(2 * 1.5 * dt), np.sqrt(2 * 0.5 * dt), 1.0)


def cases(rng):
    """Yield ``(label, callable(module))`` pairs; inputs are built fresh per call."""
    B, n, steps = 8, 16, 2000
    q0, p0 = rng.normal(size=(B, n)), rng.normal(size=(B, n))
    noise = rng.normal(size=(B, steps, 2))

    def advance(mod):
        mod.em_advance(q0.copy(), p0.copy(), _coef(), noise, np.zeros((B, 0, 2 * n)), 0, 1e6)

    def accumulate(mod):
        a1, a2 = np.zeros((B, 10, 2 * n)), np.zeros((B, 10, 2 * n, 2 * n))
        mod.em_accumulate(q0.copy(), p0.copy(), _coef(), noise, 0, 0, steps // 10, a1, a2, 1e6)

    nf, sf = 4, 500
    U0 = np.ascontiguousarray(np.broadcast_to(np.eye(2 * nf), (B, 2 * nf, 2 * nf)))

    def flow(mod):
        mod.em_flow(q0[:, :nf].copy(), p0[:, :nf].copy(), U0.copy(), _coef(),
                    np.ascontiguousarray(noise[:, :sf]),
                    np.zeros((B, 1, 2 * nf, 2 * nf)), np.zeros((B, 1, 2 * nf)), sf, 1e6)

    yield f"em_advance    B={B} N={n} steps={steps}", advance
    yield f"em_accumulate B={B} N={n} steps={steps}", accumulate
    yield f"em_flow       B={B} N={nf} steps={sf}", flow
    for N in (50, 200):
        Up = _padded(rng.normal(size=(N, N)))
        row = rng.normal(size=N)
        yield f"comm_antisym        N={N}", lambda mod, Up=Up, N=N: mod.comm_antisym(Up, N)
        yield f"comm_doubly_antisym N={N}", lambda mod, Up=Up, N=N: mod.comm_doubly_antisym(Up, N)
        yield f"comm_first_row      N={N}", lambda mod, Up=Up, r=row, N=N: mod.comm_first_row(Up, r, N)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    mods = backends()
    rng = np.random.default_rng(0)
    print(f"{'kernel':<40}" + "".join(f"{name:>12}" for name in mods) + ("     speed-up" if len(mods) > 1 else ""))
    for label, fn in cases(rng):
        best = {name: min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat))
                for name, mod in mods.items()}
        line = f"{label:<40}" + "".join(f"{t * 1e3:>10.2f}ms" for t in best.values())
        if "compiled" in best:
            line += f"{best['pure'] / best['compiled']:>12.1f}x"
        print(line)


if __name__ == "__main__":
    main()
