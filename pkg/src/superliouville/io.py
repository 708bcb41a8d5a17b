"""CSV field dumps and deterministic JSON reports."""
import csv
import json
import math
import os

import numpy as np

HEADER = ("x1", "x2", "value")


def write_field_csv(path, grid, values):
    """Write ``x1,x2,value`` rows for every node, ``x1`` index outermost.

    Floats use ``repr`` so that reading the file back recovers the node
    values exactly.  Masked (NaN) nodes are written as ``nan``.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.shape != grid.shape:
        raise ValueError(f"field shape {values.shape} does not match grid {grid.shape}")
    x1, x2 = grid.x1, grid.x2
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for i in range(grid.nx):
            xi = repr(float(x1[i]))
            for j in range(grid.ny):
                w.writerow((xi, repr(float(x2[j])), repr(float(values[i, j]))))


def read_field_csv(path, grid=None, atol=None):
    """Read a field written by :func:`write_field_csv`.

    Returns the value array; with ``grid`` given, the coordinates are
    checked against its nodes (to ``atol``, default ``1e-9 h``).
    """
    data = np.genfromtxt(path, delimiter=",", names=True, dtype=np.float64)
    if data.dtype.names != HEADER:
        raise ValueError(f"{path}: expected header {','.join(HEADER)}")
    x1 = np.unique(data["x1"])
    x2 = np.unique(data["x2"])
    if data.size != x1.size * x2.size:
        raise ValueError(f"{path}: rows do not form a tensor grid")
    values = data["value"].reshape(x1.size, x2.size)
    if grid is not None:
        tol = 1e-9 * grid.h if atol is None else atol
        if (x1.size, x2.size) != grid.shape or not (
                np.allclose(x1, grid.x1, rtol=0, atol=tol) and np.allclose(x2, grid.x2, rtol=0, atol=tol)):
            raise ValueError(f"{path}: node coordinates do not match the grid")
    return values


def jsonable(obj):
    """Plain-Python copy with numpy scalars unwrapped and non-finite floats as ``None``."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def write_json(path, obj):
    """Sorted-key, fixed-indent JSON so identical inputs give identical bytes."""
    text = json.dumps(jsonable(obj), sort_keys=True, indent=2, allow_nan=False)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text + "\n")


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path
