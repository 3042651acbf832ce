import os
import subprocess
import sys

import numpy as np
import pytest

from symext import _ext
from symext.bench import bench_kernels

needs_compiled = pytest.mark.skipif(_ext.compiled is None, reason="compiled extension not built")


def _schur_inputs(gen, n=9, m=7, nnz=5):
    # constraints in full symmetric storage: each (r, c, v) comes with (c, r, v)
    r = gen.integers(0, n, m * nnz)
    c = gen.integers(0, n, m * nnz)
    v = gen.standard_normal(m * nnz)
    rows = np.stack([r.reshape(m, nnz), c.reshape(m, nnz)], 1).ravel().astype(np.intp)
    cols = np.stack([c.reshape(m, nnz), r.reshape(m, nnz)], 1).ravel().astype(np.intp)
    vals = np.stack([v.reshape(m, nnz)] * 2, 1).ravel()
    indptr = np.arange(0, (m + 1) * 2 * nnz, 2 * nnz, dtype=np.intp)
    g = gen.standard_normal((n, n))
    X = np.ascontiguousarray(g @ g.T + np.eye(n))
    g = gen.standard_normal((n, n))
    Sinv = np.ascontiguousarray(g @ g.T + np.eye(n))
    return indptr, rows, cols, vals, X, Sinv


def _schur_dense(indptr, rows, cols, vals, X, Sinv):
    n = X.shape[0]
    mats = []
    for i in range(len(indptr) - 1):
        a = np.zeros((n, n))
        np.add.at(a, (rows[indptr[i]:indptr[i + 1]], cols[indptr[i]:indptr[i + 1]]),
                  vals[indptr[i]:indptr[i + 1]])
        mats.append(a)
    return np.array([[np.sum(ai * (X @ aj @ Sinv)) for aj in mats] for ai in mats])


def test_fallback_schur_matches_dense(gen):
    args = _schur_inputs(gen)
    assert np.allclose(_ext.fallback.schur_sparse(*args), _schur_dense(*args))


@needs_compiled
def test_compiled_schur_matches_fallback(gen):
    for _ in range(5):
        args = _schur_inputs(gen)
        assert np.allclose(_ext.compiled.schur_sparse(*args), _ext.fallback.schur_sparse(*args),
                           rtol=1e-12, atol=1e-10)


@pytest.mark.parametrize("q", [3, 4])
def test_net_max_matches_brute(gen, q):
    coef, feat = gen.standard_normal((50, q)), gen.standard_normal((70, q))
    brute = coef @ feat.T
    i, j = np.unravel_index(np.argmax(brute), brute.shape)
    for mod in [_ext.fallback] + ([_ext.compiled] if _ext.compiled is not None else []):
        value, a, b = mod.net_max(coef, feat)
        assert value == pytest.approx(brute[i, j], abs=1e-12)
        assert (a, b) == (i, j)


def test_backend_selection():
    assert _ext.BACKEND in ("cython", "python")
    env = dict(os.environ, SYMEXT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import symext; print(symext.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@needs_compiled
def test_bench_kernels_agree():
    report = bench_kernels(seed=1, repeat=1)
    assert report["backend"] == "cython"
    for entry in report["kernels"]:
        assert entry["max_abs_diff"] < 1e-9
