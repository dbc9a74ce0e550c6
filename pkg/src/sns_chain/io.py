"""CSV and JSON output with provenance comment lines."""
from __future__ import annotations

import csv
import functools
import json
import subprocess
from pathlib import Path

import numpy as np

from .chain import ChainParams

__all__ = ["version_string", "write_csv", "write_matrix_csv", "write_json", "read_csv"]


@functools.lru_cache(maxsize=1)
def version_string() -> str:
    """Package version, suffixed with ``git describe`` output when available."""
    from . import __version__

    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"], cwd=Path(__file__).parent,
                             capture_output=True, text=True, timeout=5, check=True).stdout.strip()
    except (OSError, subprocess.SubprocessError):
        return __version__
    return f"{__version__}+g{out}" if out else __version__


def _comment(params: ChainParams | None, version: str | None) -> str:
    fields = json.dumps(params.to_dict(), sort_keys=True) if params is not None else "{}"
    return f"# params={fields} version={version or version_string()}"


def write_csv(path, header, rows, params: ChainParams | None = None, version: str | None = None,
              comments=()) -> Path:
    """Write ``rows`` under a params/version comment, extra ``# ...`` lines and a header."""
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            fh.write(_comment(params, version) + "\n")
            for c in comments:
                fh.write(f"# {c}\n")
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def write_matrix_csv(path, M, params: ChainParams | None = None, version: str | None = None, name: str = "") -> Path:
    """Square matrix as ``row, c1..cK`` with an ``# order=K`` comment."""
    M = np.asarray(M, dtype=float)
    K = M.shape[0]
    header = ["row"] + [f"c{j}" for j in range(1, K + 1)]
    comments = [f"order={K}"] + ([f"matrix={name}"] if name else [])
    return write_csv(path, header, ([i + 1, *M[i]] for i in range(K)), params, version, comments)


def write_json(path, data) -> Path:
    path = Path(path)
    try:
        path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def read_csv(path) -> tuple[list, np.ndarray]:
    """Header and numeric body of a file written by :func:`write_csv`."""
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])
