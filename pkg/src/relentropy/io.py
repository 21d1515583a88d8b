"""JSON interchange for matrices and Kraus maps.

A matrix document is ``{"dim_rows": r, "dim_cols": c, "entries": [[re, im], ...]}``
with the entries in row-major order.  A Kraus map document is
``{"dim_in": ..., "dim_out": ..., "kind": ..., "kraus_ops": [matrix, ...]}``.
"""

from __future__ import annotations

import json

import numpy as np

from .cpmaps import KrausMap
from .errors import MalformedDocument


def matrix_to_dict(a) -> dict:
    a = np.asarray(a, dtype=np.complex128)
    flat = a.reshape(-1)
    return {
        "dim_rows": int(a.shape[0]),
        "dim_cols": int(a.shape[1]),
        "entries": [[float(z.real), float(z.imag)] for z in flat],
    }


def matrix_from_dict(doc: dict) -> np.ndarray:
    try:
        rows, cols, entries = int(doc["dim_rows"]), int(doc["dim_cols"]), doc["entries"]
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedDocument(f"matrix document is missing a field: {exc}") from exc
    if rows < 1 or cols < 1:
        raise MalformedDocument("matrix dimensions must be positive")
    if len(entries) != rows * cols:
        raise MalformedDocument(f"expected {rows * cols} entries, found {len(entries)}")
    try:
        arr = np.array([complex(float(re), float(im)) for re, im in entries], dtype=np.complex128)
    except (TypeError, ValueError) as exc:
        raise MalformedDocument("entries must be [re, im] pairs of numbers") from exc
    if not np.all(np.isfinite(arr)):
        raise MalformedDocument("entries must be finite")
    return arr.reshape(rows, cols)


def kraus_to_dict(phi: KrausMap) -> dict:
    return {
        "dim_in": phi.dim_in,
        "dim_out": phi.dim_out,
        "kind": phi.kind,
        "kraus_ops": [matrix_to_dict(v) for v in phi.kraus_ops],
    }


def kraus_from_dict(doc: dict) -> KrausMap:
    try:
        ops = [matrix_from_dict(m) for m in doc["kraus_ops"]]
        return KrausMap(tuple(ops), int(doc["dim_in"]), int(doc["dim_out"]), doc.get("kind", "general"))
    except (KeyError, TypeError) as exc:
        raise MalformedDocument(f"Kraus map document is malformed: {exc}") from exc


def dumps_matrix(a) -> str:
    return json.dumps(matrix_to_dict(a))


def loads_matrix(text: str) -> np.ndarray:
    return matrix_from_dict(json.loads(text))
