"""JSON matrix and result files.

Matrices are stored as ``{"dims": [...], "entries": [[re, im], ...]}`` in
row-major order.  Floats are written with 17 significant digits so that a
parse/serialize round trip is exact.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .linalg import DensityMatrix, HermitianOp
from .states import StateRecipe


class MatrixFileError(ValueError):
    """Malformed matrix document."""


def _fmt_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return "null"
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def dumps(obj, indent: int | None = 2, _level: int = 0) -> str:
    """``json.dumps`` with fixed 17-digit floats and numpy scalars accepted."""
    pad = "" if indent is None else "\n" + " " * (indent * (_level + 1))
    end = "" if indent is None else "\n" + " " * (indent * _level)
    sep = ", " if indent is None else ","
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{" + pad + (sep + pad).join(items) + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        # keep numeric pairs and flat numeric rows on one line
        if all(not isinstance(v, (list, tuple, dict, np.ndarray)) for v in seq):
            return "[" + ", ".join(dumps(v, None) for v in seq) + "]"
        return "[" + pad + (sep + pad).join(dumps(v, indent, _level + 1) for v in seq) + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def matrix_to_doc(op, name: str | None = None, recipe: StateRecipe | None = None) -> dict:
    m = op.matrix if isinstance(op, HermitianOp) else np.asarray(op)
    dims = list(op.dims) if isinstance(op, HermitianOp) else [m.shape[0]]
    doc = {"dims": dims, "entries": [[float(z.real), float(z.imag)] for z in m.ravel()]}
    if name is not None:
        doc["name"] = name
    if recipe is not None:
        doc["recipe"] = recipe.to_json()
    return doc


def doc_to_array(doc: dict) -> tuple[np.ndarray, list[int]]:
    if not isinstance(doc, dict):
        raise MatrixFileError("matrix document must be a JSON object")
    if "entries" not in doc:
        if "recipe" in doc:
            state = StateRecipe.from_json(doc["recipe"]).build()
            return np.array(state.matrix), list(state.dims)
        raise MatrixFileError("matrix document needs 'entries' or 'recipe'")
    try:
        dims = [int(d) for d in doc["dims"]]
        entries = np.asarray(doc["entries"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise MatrixFileError(f"bad dims/entries: {exc}") from None
    if not dims or any(d < 1 for d in dims):
        raise MatrixFileError(f"bad dims {dims}")
    n = math.prod(dims)
    if entries.shape != (n * n, 2):
        raise MatrixFileError(f"expected {n * n} [re, im] pairs for dims {dims}, got shape {entries.shape}")
    return (entries[:, 0] + 1j * entries[:, 1]).reshape(n, n), dims


def load_doc(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise MatrixFileError(f"cannot read {path}: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise MatrixFileError(f"{path}: invalid JSON ({exc})") from None


def read_operator(path) -> tuple[HermitianOp, dict]:
    doc = load_doc(path)
    m, dims = doc_to_array(doc)
    try:
        return HermitianOp(m, dims), doc
    except ValueError as exc:
        raise MatrixFileError(f"{path}: {exc}") from None


def read_state(path) -> tuple[DensityMatrix, dict]:
    doc = load_doc(path)
    m, dims = doc_to_array(doc)
    try:
        return DensityMatrix(m, dims), doc
    except ValueError as exc:
        raise MatrixFileError(f"{path}: {exc}") from None


def write_doc(doc: dict, path=None) -> str:
    text = dumps(doc) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text
