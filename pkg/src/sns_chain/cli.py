"""Command-line front end: ``sns-chain <command> --config path.json``.

Exit codes: 0 success, 1 a check failed, 2 bad configuration or unusable
output location.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .chain import ChainParams, build_struct_matrices, check_drift_stability
from .harmonic import assemble_phi0, green_kappa, heat_current, phi_tridiagonal, phi_vector, temperature_profile
from .io import version_string, write_csv, write_json, write_matrix_csv
from .lyapunov import (IllConditionedWarning, SymmetryTag, UnstableDriftError, classify_symmetry,
                       lyapunov_residual, solve_lyapunov)
from .montecarlo import ConfigError, SimConfig, estimate_stationary_covariance, integrate, write_trajectory_csv
from .perturbation import (build_inhomogeneity, current_pipeline, current_uniformity_check, solve_first_order_dense,
                           y1_profile, y1_structured, y2_profile)

COMMANDS = ("harmonic", "perturb", "current-scan", "profile", "simulate", "verify")
EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


@dataclass(frozen=True)
class RunManifest:
    command: str
    params: ChainParams | None
    sim: SimConfig | None
    output_dir: Path
    format: str = "csv"


def load_config(path) -> tuple[ChainParams, SimConfig | None]:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    try:
        params = ChainParams.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid chain parameters: {exc}") from exc
    sim = SimConfig.from_dict(data["sim"]) if data.get("sim") is not None else None
    return params, sim


def _table(manifest: RunManifest, name: str, header, rows, params=None, comments=()) -> Path:
    rows = [list(r) for r in rows]
    if manifest.format == "json":
        return write_json(manifest.output_dir / f"{name}.json",
                          {"columns": list(header), "rows": [[_num(v) for v in r] for r in rows],
                           "params": (params or manifest.params).to_dict() if (params or manifest.params) else None,
                           "version": version_string()})
    return write_csv(manifest.output_dir / f"{name}.csv", header, rows, params or manifest.params,
                     comments=comments)


def _num(v):
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


# ------------------------------------------------------------------ commands


def cmd_harmonic(m: RunManifest) -> int:
    p = m.params
    mats = build_struct_matrices(p)
    cov = assemble_phi0(p)
    Phi = cov.assembled
    write_matrix_csv(m.output_dir / "phi0_blocks.csv", Phi, p, name="Phi0")
    T = temperature_profile(cov) / p.kB
    _table(m, "temperature_profile", ["i", "temperature"], ([i + 1, t] for i, t in enumerate(T)))
    J = heat_current(cov)
    _table(m, "current", ["i", "Z_i_i+1"], ([i + 1, j] for i, j in enumerate(J)))
    res = lyapunov_residual(mats.b, Phi, -mats.D)
    dense = solve_lyapunov(mats.b, -mats.D)
    write_json(m.output_dir / "residual.json", {
        "residual": res,
        "relative_residual": res / float(np.max(np.abs(mats.D))),
        "dense_max_abs_diff": float(np.max(np.abs(dense - Phi))),
        "params": p.to_dict(), "version": version_string(),
    })
    return EXIT_OK


def _middle_third_slope(y: np.ndarray) -> float:
    N = y.size
    i = np.arange(1, N + 1)
    sel = slice(N // 3, N - N // 3)
    return float(np.polyfit(i[sel], y[sel], 1)[0])


def cmd_perturb(m: RunManifest) -> int:
    p = m.params
    d = solve_first_order_dense(p)
    y1 = y1_profile(p, d)
    y2 = y2_profile(p)
    y2_exact = np.diag(d.blocks(2).Y)
    _table(m, "perturb_profile", ["i", "y1_exact", "y1_closed", "y2_exact"],
           ([i + 1, a, b, c] for i, (a, b, c) in enumerate(zip(y1.exact, y1.closed, y2_exact))))
    cp = current_pipeline(p)
    summary = {
        "varphi1": cp.varphi1,
        "current_correction": cp.current_correction,
        "h": y2.h, "h1": y2.h1, "h2": y2.h2, "h_asymptotic": y2.h_asymptotic,
        "rho0": y1.rho0, "rho1": y1.rho1,
        "slope_kappa0": (4.0 * p.nu / ((4.0 + p.nu) ** 2 * (p.N + 1))) if p.kappa == 0.0 else None,
        "slope_fit_middle_third": _middle_third_slope(y1.exact) if p.N >= 6 else None,
        "params": p.to_dict(), "version": version_string(),
    }
    write_json(m.output_dir / "perturb_summary.json", summary)
    return EXIT_OK


def cmd_current_scan(m: RunManifest, N_list) -> int:
    p = m.params
    if not N_list:
        raise ConfigError("--N-list must not be empty")
    rows = []
    for N in N_list:
        cp = current_pipeline(p.replace(N=N))
        rows.append([N, cp.varphi1, cp.current_correction])
    _table(m, "current_scan", ["N", "varphi1", "current_correction"], rows)
    n_max = max(N_list)
    half = max(2, n_max // 2)
    metric = abs(current_pipeline(p.replace(N=n_max)).varphi1 - current_pipeline(p.replace(N=half)).varphi1)
    write_json(m.output_dir / "current_scan.json", {
        "N_max": n_max, "N_half": half, "saturation_metric": metric,
        "params": p.to_dict(), "version": version_string(),
    })
    return EXIT_OK


def cmd_profile(m: RunManifest, figure: str | None) -> int:
    p = m.params
    N = p.N
    i = np.arange(1, N + 1)
    if figure in (None, "y1"):
        cols, names = [], []
        for kappa in (0.0, 0.1):
            cols.append(y1_profile(p.replace(kappa=kappa)).exact)
            names.append(f"y1_kappa_{kappa:g}")
        linear = 2.0 * p.nu / (4.0 + p.nu) ** 2 * (2.0 * i / (N + 1) - 1.0)
        _table(m, "y1_profile", ["i", *names, "linear_kappa_0"],
               ([k, *(c[k - 1] for c in cols), linear[k - 1]] for k in i))
    if figure in (None, "y2"):
        d = solve_first_order_dense(p)
        exact = np.diag(d.blocks(2).Y)
        y2 = y2_profile(p)
        _table(m, "y2_profile", ["i", "y2_exact", "y2_pipeline"],
               ([k, exact[k - 1], y2.diag[k - 1]] for k in i))
        write_json(m.output_dir / "y2_constants.json", {
            "h": y2.h, "h1": y2.h1, "h2": y2.h2, "h_asymptotic": y2.h_asymptotic,
            "h1_asymptotic": y2.h1_asymptotic, "h2_asymptotic": y2.h2_asymptotic,
            "midpoint": float(exact[(N - 1) // 2]),
            "params": p.to_dict(), "version": version_string(),
        })
    return EXIT_OK


def cmd_simulate(m: RunManifest, dump_every: int | None = None) -> int:
    if m.sim is None:
        raise ConfigError("simulate requires a 'sim' object in the config")
    p, sim = m.params, m.sim
    est = estimate_stationary_covariance(p, sim)
    out = est.to_json_dict(p, sim)
    if p.lam == 0.0:
        z = est.z_scores(assemble_phi0(p).assembled)
        out["harmonic_fraction_within_3se"] = float(np.mean(z <= 3.0))
    out["version"] = version_string()
    write_json(m.output_dir / "simulation.json", out)
    if dump_every:
        write_trajectory_csv(m.output_dir / "trajectory.csv", integrate(p, sim, output_every=dump_every), p)
    return EXIT_OK


# ------------------------------------------------------------------ verify


def _check(report: list, name: str, value, limit, passed=None, **extra):
    ok = bool(value <= limit) if passed is None else bool(passed)
    entry = {"check": name, "value": _num(value), "limit": _num(limit), "passed": ok}
    entry.update(extra)
    report.append(entry)
    return ok


def _rel(a, b) -> float:
    scale = max(float(np.max(np.abs(b))), np.finfo(float).tiny)
    return float(np.max(np.abs(a - b))) / scale


def _verify_instance(p: ChainParams, report: list, tag: dict):
    mats = build_struct_matrices(p)
    stable, absc = check_drift_stability(mats)
    _check(report, "drift_stable", absc, 0.0, passed=stable, **tag)
    cov = assemble_phi0(p)
    Phi = cov.assembled
    Dmax = float(np.max(np.abs(mats.D)))
    _check(report, "harmonic_residual", lyapunov_residual(mats.b, Phi, -mats.D) / Dmax, 1e-10, **tag)
    _check(report, "harmonic_vs_dense", _rel(solve_lyapunov(mats.b, -mats.D), Phi), 1e-9, **tag)
    _check(report, "phi_closed_vs_tridiagonal",
           float(np.max(np.abs(phi_vector(p).base - phi_tridiagonal(p)), initial=0.0)), 1e-10, **tag)

    d = solve_first_order_dense(p)
    _check(report, "first_order_residuals", max(d.residuals()), 1e-9, **tag)
    b0 = d.blocks(0)
    Gi = green_kappa(p)
    X0 = -Gi @ np.diag(np.diag(Gi)) @ Gi
    _check(report, "zeroth_component_closed_form",
           max(_rel(b0.X, X0), float(np.max(np.abs(b0.Y))), float(np.max(np.abs(b0.Z)))), 1e-10, **tag)
    want = {
        (1, "X"): SymmetryTag.C_ANTISYMMETRIC, (1, "Y"): SymmetryTag.C_ANTISYMMETRIC,
        (1, "Z"): SymmetryTag.C_SYMMETRIC, (2, "X"): SymmetryTag.C_SYMMETRIC,
        (2, "Y"): SymmetryTag.C_SYMMETRIC, (2, "Z"): SymmetryTag.C_ANTISYMMETRIC,
    }
    missing = []
    for (l, blk), t in want.items():
        M = getattr(d.blocks(l), blk)
        floor = 1e-12 * max(float(np.max(np.abs(getattr(d.blocks(l), k)))) for k in "XZY")
        tags = classify_symmetry(M, 1e-10, atol=floor)
        if t not in tags:
            missing.append(f"{blk}{l}:{t}")
        if blk == "Z" and SymmetryTag.ANTISYMMETRIC not in tags:
            missing.append(f"Z{l}:antisymmetric")
    _check(report, "first_order_symmetry_table", len(missing), 0, missing=missing, **tag)
    H = build_inhomogeneity(p)
    ct = [SymmetryTag.CT_SYMMETRIC, SymmetryTag.CT_ANTISYMMETRIC, SymmetryTag.CT_SYMMETRIC]
    bad_ct = [l for l in range(3) if ct[l] not in classify_symmetry(H[l], 1e-12, include_ct=True)]
    _check(report, "inhomogeneity_ct_symmetry", len(bad_ct), 0, failing=bad_ct, **tag)
    b2 = d.blocks(2)
    _check(report, "Z2_current_and_Y2_11_zero",
           max(float(np.max(np.abs(np.diag(b2.Z, 1)))), abs(float(b2.Y[0, 0]))), 1e-10, **tag)
    uni = current_uniformity_check(d)
    _check(report, "current_uniformity", uni["z1_spread"], 1e-10, **tag)
    cp = current_pipeline(p)
    _check(report, "current_pipeline_vs_dense", abs(cp.varphi1 - d.blocks(1).Z[0, 1]), 1e-8, **tag)
    y1s = y1_structured(p, cp)
    _check(report, "y1_structured_vs_dense", float(np.max(np.abs(y1s - np.diag(d.blocks(1).Y)))), 1e-8, **tag)
    y2 = y2_profile(p)
    _check(report, "y2_pipeline_vs_dense", float(np.max(np.abs(y2.diag - np.diag(b2.Y)))), 1e-8, **tag)


def _verify_tampered(p: ChainParams, report: list):
    mats = build_struct_matrices(p)
    b = -mats.b
    stable, absc = check_drift_stability(b)
    tag = {"N": p.N, "nu": p.nu, "kappa": p.kappa, "tampered": True}
    _check(report, "drift_stable", absc, 0.0, passed=stable, **tag)
    try:
        Phi = solve_lyapunov(b, -mats.D)
    except UnstableDriftError as exc:
        _check(report, "harmonic_solve", 1, 0, passed=False, error=str(exc), **tag)
        return
    _check(report, "harmonic_residual", lyapunov_residual(b, Phi, -mats.D), 1e-10, **tag)


def _verify_mc(p: ChainParams, sim: SimConfig, report: list):
    p0 = p.replace(lam=0.0)
    est = estimate_stationary_covariance(p0, sim)
    frac = float(np.mean(est.z_scores(assemble_phi0(p0).assembled) <= 3.0))
    _check(report, "mc_harmonic_fraction_within_3se", -frac, -0.95, fraction=frac, N=p.N)


def cmd_verify(m: RunManifest, tamper: bool = False, N_list=None) -> int:
    base = m.params or ChainParams(N=2, T1=2.0, TN=1.0)
    report: list = []
    Ns = N_list or [2, 4, 8, 16]
    if tamper:
        _verify_tampered(base, report)
    else:
        for N in Ns:
            for nu in (0.5, 1.0, 2.0):
                for kappa in (0.0, 0.1, 1.0):
                    p = ChainParams(N=N, omega=base.gamma * math.sqrt(nu), gamma=base.gamma, kappa=kappa,
                                    T1=base.T1, TN=base.TN, kB=base.kB)
                    with warnings.catch_warnings():
                        warnings.simplefilter("error", IllConditionedWarning)
                        try:
                            _verify_instance(p, report, {"N": N, "nu": nu, "kappa": kappa})
                        except IllConditionedWarning as exc:
                            _check(report, "conditioning", 1, 0, passed=False, error=str(exc),
                                   N=N, nu=nu, kappa=kappa)
        if m.sim is not None and m.params is not None:
            _verify_mc(m.params, m.sim, report)
    failed = [r for r in report if not r["passed"]]
    out = {"passed": not failed, "n_checks": len(report), "n_failed": len(failed),
           "checks": report, "version": version_string()}
    write_json(m.output_dir / "verify_report.json", out)
    for r in failed:
        print(f"FAIL {r['check']} {json.dumps({k: v for k, v in r.items() if k != 'check'})}", file=sys.stderr)
    print(f"{len(report) - len(failed)}/{len(report)} checks passed")
    return EXIT_OK if not failed else EXIT_FAIL


# ------------------------------------------------------------------ entry point


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc
    if any(v < 2 for v in vals):
        raise argparse.ArgumentTypeError("chain lengths must be >= 2")
    return vals


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sns-chain", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON file with chain parameters and optional 'sim' object")
    ap.add_argument("--out", default=".", help="output directory (created if missing)")
    ap.add_argument("--format", choices=("csv", "json"), default="csv", help="format of tabular outputs")
    ap.add_argument("--figure", choices=("y1", "y2"), help="profile: restrict to one figure")
    ap.add_argument("--N-list", type=_int_list, dest="N_list", help="comma-separated chain lengths")
    ap.add_argument("--tamper", action="store_true", help="verify: sign-flip the drift as a self-test")
    ap.add_argument("--dump-every", type=int, default=None, help="simulate: write trajectory 0 every K steps")
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        if args.config is None:
            if args.command != "verify":
                raise ConfigError(f"{args.command} requires --config")
            params, sim = None, None
        else:
            params, sim = load_config(args.config)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        m = RunManifest(args.command, params, sim, out, args.format)
        if args.command == "harmonic":
            return cmd_harmonic(m)
        if args.command == "perturb":
            return cmd_perturb(m)
        if args.command == "current-scan":
            return cmd_current_scan(m, args.N_list or [params.N])
        if args.command == "profile":
            return cmd_profile(m, args.figure)
        if args.command == "simulate":
            return cmd_simulate(m, args.dump_every)
        return cmd_verify(m, tamper=args.tamper, N_list=args.N_list)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
