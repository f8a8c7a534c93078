"""CSV import/export. Metadata rides along as ``# key=value`` comment lines."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .markov import GridSpec, MetastableReport, TransitionMatrix


def _fmt(x: float) -> str:
    return repr(float(x))


def _write(path: Path, meta: dict, header: list[str] | None, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# {k}={json.dumps(v, sort_keys=True)}" for k, v in meta.items()]
    if header:
        lines.append(",".join(header))
    lines.extend(",".join(cells) for cells in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_csv(path) -> tuple[dict, list[str] | None, np.ndarray]:
    """Return ``(meta, header, values)``; the header is detected as a non-numeric first line."""
    meta: dict = {}
    header = None
    data = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            meta[key] = json.loads(val) if val else None
            continue
        cells = line.split(",")
        try:
            data.append([float(c) for c in cells])
        except ValueError:
            if header is not None or data:
                raise
            header = cells
    return meta, header, np.array(data, dtype=float)


def grid_meta(grid: GridSpec | None) -> dict:
    if grid is None:
        return {}
    return {"grid_lo": grid.lo, "grid_hi": grid.hi, "n_cells": grid.n_cells}


def write_matrix(path, T: TransitionMatrix, meta: dict | None = None) -> None:
    m = {"kind": "transition_matrix", "absorbing_state": 0, **grid_meta(T.grid), **(meta or {})}
    _write(path, m, None, ([_fmt(x) for x in row] for row in T.T))


def read_matrix(path) -> tuple[TransitionMatrix, dict]:
    meta, _, values = read_csv(path)
    grid = None
    if "n_cells" in meta:
        grid = GridSpec(meta["grid_lo"], meta["grid_hi"], meta["n_cells"])
    return TransitionMatrix(values, grid), meta


def write_report(path, report: MetastableReport, grid: GridSpec | None, meta: dict | None = None):
    """Per-state table (midpoint, MFPT, metastable probability) plus scalar metadata."""
    ev = report.spectrum.values
    m = {
        "kind": "metastable_report",
        **grid_meta(grid),
        "eigenvalues_real": [float(v.real) for v in ev],
        "eigenvalues_imag": [float(v.imag) for v in ev],
        "mfpt_system": report.mfpt.value if np.isfinite(report.mfpt.value) else "inf",
        "mfpt_reliable": report.mfpt.reliable,
        "warnings": list(report.warnings),
        **(meta or {}),
    }
    mids = grid.midpoints if grid is not None else np.arange(1, len(report.mfpt_state), dtype=float)
    rows = [["0", "nan", _fmt(report.mfpt_state[0]), _fmt(report.metastable[0])]]
    for i in range(1, len(report.mfpt_state)):
        rows.append(
            [str(i), _fmt(mids[i - 1]), _fmt(report.mfpt_state[i]), _fmt(report.metastable[i])]
        )
    _write(path, m, ["state", "midpoint", "mfpt", "metastable"], rows)


def write_eigenvalues(path, report: MetastableReport, meta: dict | None = None):
    ev = report.spectrum.values
    rows = [
        [str(i + 1), _fmt(v.real), _fmt(v.imag), _fmt(abs(v)), str(int(f))]
        for i, (v, f) in enumerate(zip(ev, report.spectrum.complex_flags))
    ]
    _write(path, {"kind": "eigenvalues", **(meta or {})}, ["k", "real", "imag", "magnitude", "complex"], rows)


def write_table(path, header: list[str], rows, meta: dict | None = None):
    """Generic numeric/string table; floats are written round-trip exact."""

    def cell(x):
        if isinstance(x, str):
            return x
        if isinstance(x, (bool, np.bool_)):
            return str(int(x))
        if isinstance(x, (int, np.integer)):
            return str(int(x))
        return _fmt(x)

    _write(path, meta or {}, header, ([cell(x) for x in row] for row in rows))


def write_dataset(path, data: np.ndarray, labels, meta: dict | None = None):
    """Rows are states, columns are steps; the first column holds the row label."""
    m = {"kind": "trajectory_dataset", **(meta or {})}
    rows = ([str(lab)] + [_fmt(x) for x in row] for lab, row in zip(labels, data))
    _write(path, m, None, rows)


def read_dataset(path) -> tuple[np.ndarray, list[str]]:
    labels, data = [], []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        cells = line.split(",")
        try:
            data.append([float(c) for c in cells])
            labels.append(f"x{len(labels)}")
        except ValueError:
            labels.append(cells[0])
            data.append([float(c) for c in cells[1:]])
    return np.array(data, dtype=float), labels
