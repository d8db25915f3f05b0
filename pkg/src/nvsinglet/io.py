"""CSV/JSON writers with provenance headers, and a CSV reader for CLI inputs.

Outputs carry no timestamps so that identical config + seed gives identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import __version__

FLOAT_FMT = "%.8e"  # 9 significant digits


def header_lines(config_hash: str, extra: dict | None = None) -> list[str]:
    lines = [f"nvsinglet {__version__}", f"config_sha256 {config_hash}"]
    for k, v in (extra or {}).items():
        lines.append(f"{k} {v}")
    return lines


def write_csv(path, columns: dict, config_hash: str, extra: dict | None = None) -> Path:
    """Write equal-length columns; the first non-comment line holds the column names."""
    path = Path(path)
    names = list(columns)
    data = np.column_stack([np.asarray(columns[k], dtype=float) for k in names])
    with path.open("w", newline="\n") as fh:
        for line in header_lines(config_hash, extra):
            fh.write(f"# {line}\n")
        fh.write(",".join(names) + "\n")
        np.savetxt(fh, data, fmt=FLOAT_FMT, delimiter=",")
    return path


def read_csv(path) -> dict[str, np.ndarray]:
    path = Path(path)
    rows = [ln for ln in path.read_text().splitlines() if ln.strip() and not ln.startswith("#")]
    if not rows:
        raise ValueError(f"{path}: no data")
    names = [s.strip() for s in rows[0].split(",")]
    try:
        data = np.loadtxt(rows[1:], delimiter=",", ndmin=2)
    except ValueError as e:
        raise ValueError(f"{path}: {e}") from e
    if data.shape[1] != len(names):
        raise ValueError(f"{path}: {len(names)} column names but {data.shape[1]} columns")
    return {k: data[:, i] for i, k in enumerate(names)}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if np.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def write_json(path, payload: dict, config_hash: str) -> Path:
    path = Path(path)
    doc = {"tool": "nvsinglet", "tool_version": __version__, "config_sha256": config_hash,
           **_jsonable(payload)}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path
