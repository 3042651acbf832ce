"""Timing harnesses for the extension SDPs and the compiled kernels."""

from __future__ import annotations

import math
import time

import numpy as np
import scipy.sparse as sp

from . import _ext
from .hierarchy import ExtensionOptions, build_extension_sdp
from .states import random_density, rng


def expected_side(dim_a: int, dim_b: int, k: int) -> int:
    return dim_a * math.comb(dim_b + k - 1, k)


def loglog_slope(sides, seconds) -> float:
    x, y = np.log(np.asarray(sides, float)), np.log(np.asarray(seconds, float))
    return float(np.polyfit(x, y, 1)[0])


def bench_levels(dims=(2, 2), kmin: int = 2, kmax: int = 10, seed: int = 0,
                 repeat: int = 3, ppt_cuts: bool = False) -> dict:
    """Build and solve the level-k program for k = kmin..kmax."""
    dim_a, dim_b = dims
    rho = random_density([dim_a, dim_b], seed=seed)
    rows = []
    for k in range(kmin, kmax + 1):
        opts = ExtensionOptions(k=k, ppt_cuts=ppt_cuts)
        t0 = time.perf_counter()
        esdp = build_extension_sdp(rho, opts)
        problem = esdp.problem
        t_build = time.perf_counter() - t0
        best, sol = math.inf, None
        for _ in range(repeat):
            t0 = time.perf_counter()
            sol = esdp.builder.solve()
            best = min(best, time.perf_counter() - t0)
        rows.append({
            "k": k,
            "block_side": esdp.block_side,
            "expected_side": expected_side(dim_a, dim_b, k),
            "variables": problem.m,
            "build_s": t_build,
            "solve_s": best,
            "iterations": sol.iterations,
            "status": sol.status.value,
        })
    slope = loglog_slope([r["block_side"] for r in rows], [r["build_s"] + r["solve_s"] for r in rows]) \
        if len(rows) > 1 else math.nan
    return {
        "dims": [dim_a, dim_b],
        "rows": rows,
        "sides_match": all(r["block_side"] == r["expected_side"] for r in rows),
        "loglog_slope": slope,
    }


def _timeit(fn, repeat: int) -> float:
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _random_constraints(n: int, m: int, nnz: int, gen) -> sp.csr_matrix:
    rows = []
    for _ in range(m):
        r, c = gen.integers(0, n, nnz), gen.integers(0, n, nnz)
        v = gen.standard_normal(nnz)
        a = sp.coo_matrix((v, (r, c)), shape=(n, n))
        a = (a + a.T).tocoo()
        rows.append(sp.csr_matrix((a.data, (np.zeros_like(a.row), a.row * n + a.col)), shape=(1, n * n)))
    return sp.vstack(rows, format="csr")


def bench_kernels(seed: int = 0, repeat: int = 3) -> dict:
    """Time the compiled kernels against the numpy fallback on one workload each."""
    gen = rng(seed)
    out = {"backend": _ext.BACKEND, "compiled_available": _ext.compiled is not None, "kernels": []}
    n, m = 60, 120
    amat = _random_constraints(n, m, 6, gen)
    coo = [amat[i].tocoo() for i in range(m)]
    indptr = np.concatenate([[0], np.cumsum([c.nnz for c in coo])]).astype(np.intp)
    flat = np.concatenate([c.col for c in coo])
    rows, cols = (flat // n).astype(np.intp), (flat % n).astype(np.intp)
    vals = np.concatenate([c.data for c in coo]).astype(float)
    g = gen.standard_normal((n, n))
    X = np.ascontiguousarray(g @ g.T + n * np.eye(n))
    g = gen.standard_normal((n, n))
    Sinv = np.ascontiguousarray(np.linalg.inv(g @ g.T + n * np.eye(n)))
    coef = gen.standard_normal((3000, 4))
    feat = gen.standard_normal((3000, 4))
    work = {
        "schur_sparse": (lambda mod: mod.schur_sparse(indptr, rows, cols, vals, X, Sinv),
                         f"n={n}, m={m}"),
        "net_max": (lambda mod: mod.net_max(coef, feat), "3000 x 3000 pairs, width 4"),
    }
    for name, (call, size) in work.items():
        ref = call(_ext.fallback)
        t_py = _timeit(lambda: call(_ext.fallback), repeat)
        entry = {"kernel": name, "workload": size, "python_s": t_py}
        if _ext.compiled is not None:
            got = call(_ext.compiled)
            t_c = _timeit(lambda: call(_ext.compiled), repeat)
            a = np.asarray(got[0] if isinstance(got, tuple) else got)
            b = np.asarray(ref[0] if isinstance(ref, tuple) else ref)
            entry.update(cython_s=t_c, speedup=t_py / t_c, max_abs_diff=float(np.max(np.abs(a - b))))
        out["kernels"].append(entry)
    return out
