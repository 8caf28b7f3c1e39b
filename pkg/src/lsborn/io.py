"""CSV and JSON writers for run outputs.

Floats are written with ``repr`` so identical runs give byte-identical files, and
nothing time-dependent is recorded.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np


def _num(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def write_csv(path, header, columns) -> Path:
    """Write equally long columns under ``header``; floats via ``repr``, ints as is."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = [np.asarray(c) for c in columns]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([str(v) if isinstance(v, (np.integer, int)) else _num(v) for v in row])
    return path


def write_field(path, x, u) -> Path:
    u = np.asarray(u, dtype=complex)
    return write_csv(path, ["x", "re", "im"], [x, u.real, u.imag])


def write_points(path, z, names=("re", "im")) -> Path:
    z = np.asarray(z, dtype=complex)
    return write_csv(path, list(names), [z.real, z.imag])


def write_locus(path, locus) -> Path:
    return write_csv(path, ["re", "im", "branch", "t"],
                     [locus.lam.real, locus.lam.imag, locus.branch.astype(int), locus.t])


def write_trace(path, trace) -> Path:
    err = trace.err_vs_ref if trace.err_vs_ref is not None else np.full(trace.n.size, np.nan)
    return write_csv(path, ["n", "monitor", "residual", "err_vs_ref"],
                     [trace.n.astype(int), trace.monitor, trace.residual, err])


def read_csv(path) -> dict:
    """Columns of a CSV written by this module as float arrays keyed by header."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return {h: np.array([float(r[i]) for r in body]) for i, h in enumerate(header)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        # strict JSON has no nan/inf
        return x if math.isfinite(x) else None
    if isinstance(obj, complex):
        return [_jsonable(obj.real), _jsonable(obj.imag)]
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path, data) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(_jsonable(data), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")
    return path


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
