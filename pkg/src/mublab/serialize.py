"""JSON wire formats: matrices, bases, bundles.

A matrix is ``{"rows": r, "cols": c, "entries": [[re, im], ...]}`` in row-major
order. Floats go through :func:`repr`, which round-trips doubles exactly.
"""
import json

import numpy as np

from .exceptions import MatrixParseError


def matrix_to_json(M, labels=None):
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    obj = {
        "rows": int(M.shape[0]),
        "cols": int(M.shape[1]),
        "entries": [[float(z.real), float(z.imag)] for z in M.ravel()],
    }
    if labels is not None:
        obj["labels"] = [str(s) for s in labels]
    return obj


def matrix_from_json(obj, name="matrix"):
    if not isinstance(obj, dict):
        raise MatrixParseError(f"{name}: expected a JSON object")
    try:
        rows, cols, entries = int(obj["rows"]), int(obj["cols"]), obj["entries"]
    except (KeyError, TypeError, ValueError) as exc:
        raise MatrixParseError(f"{name}: missing or invalid rows/cols/entries ({exc})") from None
    if rows < 1 or cols < 1:
        raise MatrixParseError(f"{name}: rows and cols must be positive")
    if not isinstance(entries, list) or len(entries) != rows * cols:
        raise MatrixParseError(f"{name}: expected {rows * cols} entries")
    vals = np.empty(rows * cols, dtype=complex)
    for k, e in enumerate(entries):
        if not (isinstance(e, (list, tuple)) and len(e) == 2):
            raise MatrixParseError(f"{name}: entry {k} is not a [re, im] pair")
        try:
            vals[k] = complex(float(e[0]), float(e[1]))
        except (TypeError, ValueError):
            raise MatrixParseError(f"{name}: entry {k} is not numeric") from None
    return vals.reshape(rows, cols)


def loads_matrix(text, name="matrix"):
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MatrixParseError(f"{name}: {exc.msg}", exc.lineno, exc.colno) from None
    return matrix_from_json(obj, name=name)


def load_matrix(path):
    with open(path) as fh:
        return loads_matrix(fh.read(), name=str(path))


def dump_matrix(M, path, labels=None):
    with open(path, "w") as fh:
        json.dump(matrix_to_json(M, labels=labels), fh)


def complex_to_json(z):
    return [float(np.real(z)), float(np.imag(z))]


def complex_from_json(pair):
    return complex(float(pair[0]), float(pair[1]))


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays and complex numbers for :mod:`json`."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            if obj.ndim == 2:
                return matrix_to_json(obj)
            return [complex_to_json(z) for z in obj.ravel()]
        return obj.tolist()
    if isinstance(obj, (complex, np.complexfloating)):
        return complex_to_json(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj
